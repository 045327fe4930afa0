#include "cascademix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

#include "cascademix/cascade.hpp"
#include "cascademix/io.hpp"
#include "cascademix/recovery.hpp"

namespace cascademix {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  auto t = trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front())
    return t.substr(1, t.size() - 2);
  return t;
}

double to_double(const std::string& key, const std::string& value) {
  auto v = unquote(value);
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(fmt::format("setting '{}': '{}' is not a number", key, value));
  }
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  auto v = unquote(value);
  if (v == "inf" || v == "exact") return kExactM;
  double x = to_double(key, v);
  if (!(x >= 0.0) || x != std::floor(x) || x > 1e18)
    throw Error(fmt::format("setting '{}': '{}' is not a non-negative integer", key, value));
  return static_cast<std::uint64_t>(x);
}

std::vector<std::string> to_list(const std::string& value) {
  auto v = trim(value);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  auto v = unquote(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(fmt::format("setting '{}': '{}' is not a boolean", key, value));
}

std::string m_text(std::uint64_t m) { return m == kExactM ? "inf" : std::to_string(m); }

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

nlohmann::json num_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::vector<EventQuery> merged(std::vector<EventQuery> a, const std::vector<EventQuery>& b) {
  std::set<EventQuery> seen(a.begin(), a.end());
  for (const auto& q : b)
    if (seen.insert(q).second) a.push_back(q);
  return a;
}

}  // namespace

bool ExperimentReport::has_failures() const {
  return std::any_of(rows.begin(), rows.end(), [](const ExperimentRow& r) { return std::isnan(r.max_err); });
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.m_grid.empty()) throw Error("experiment spec: M_grid is empty");
  if (spec.seeds.empty()) throw Error("experiment spec: seeds is empty");
  for (std::size_t i = 0; i < spec.m_grid.size(); ++i) {
    if (spec.m_grid[i] == kExactM && i + 1 != spec.m_grid.size())
      throw Error("experiment spec: the exact sentinel (inf) may only be the last M_grid entry");
    if (i > 0 && spec.m_grid[i - 1] != kExactM && spec.m_grid[i] != kExactM &&
        spec.m_grid[i] <= spec.m_grid[i - 1])
      throw Error("experiment spec: M_grid must be strictly increasing");
  }
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) throw Error("experiment spec: delta must lie in (0, 1)");
  if (spec.workers < 1) throw Error("experiment spec: workers must be at least 1");
}

MixtureModel experiment_model(const ExperimentSpec& spec) {
  if (!spec.model_path.empty()) return read_model_file(spec.model_path);
  if (spec.mode == RecoveryMode::directed)
    return random_directed_mixture(spec.n, spec.out_degree, spec.weights, spec.min_delta, spec.alpha,
                                   spec.model_seed);
  return random_mixture(spec.n, spec.topology, spec.weights, spec.min_delta, spec.alpha, spec.model_seed);
}

double theoretical_bound(int n, double p_min, double delta_sep, std::uint64_t m, double confidence) {
  if (m == kExactM) return 0.0;
  const double N = n;
  return 41.0 / (p_min * p_min * p_min * delta_sep * delta_sep) *
         std::sqrt((2.0 * N / static_cast<double>(m)) * std::log(12.0 * N * N / confidence));
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  const MixtureModel model = experiment_model(spec);
  const auto stats = separation_stats(model);
  const double threshold = spec.edge_threshold.value_or(stats.p_min / 4.0);
  RecoveryOptions opts;
  opts.edge_threshold = threshold;

  std::optional<MomentTable> exact;
  if (std::find(spec.m_grid.begin(), spec.m_grid.end(), kExactM) != spec.m_grid.end()) {
    exact = exact_table(model, recovery_queries(model, spec.mode));
  }

  struct Cell {
    std::uint64_t m;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto m : spec.m_grid)
    for (auto s : spec.seeds) cells.push_back({m, s});

  ExperimentReport report;
  report.rows.resize(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell c = cells[i];
    ExperimentRow row;
    row.n = model.n_vertices();
    row.delta_sep = stats.delta;
    row.p_min = stats.p_min;
    row.alpha = model.alpha();
    row.m = c.m;
    row.seed = c.seed;
    row.bound = theoretical_bound(row.n, stats.p_min, stats.delta, c.m, spec.delta);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      MomentTable table;
      if (c.m == kExactM) {
        table = *exact;
      } else {
        auto corpus = run_corpus(model, c.m, c.seed);
        for (Vertex u = 0; u < model.n_vertices(); ++u) {
          bool seen = std::any_of(corpus.cascades.begin(), corpus.cascades.end(),
                                  [&](const Cascade& x) { return x.source == u; });
          if (!seen) throw Error(fmt::format("no conditioning samples (vertex {} never a source)", u));
        }
        auto pairs = all_pair_queries(model.n_vertices());
        auto first = build_table(corpus, pairs);
        first.directed = model.directed();
        auto edges = learn_edges(first, threshold);
        table = build_table(corpus, merged(pairs, required_queries(model.n_vertices(), edges, spec.mode)));
        table.directed = model.directed();
      }
      RecoveredMixture rec;
      switch (spec.mode) {
        case RecoveryMode::balanced: rec = recover_balanced(table, opts); break;
        case RecoveryMode::general_alpha: rec = recover_general(table, model.alpha(), opts); break;
        case RecoveryMode::directed: rec = recover_directed(table, opts); break;
      }
      row.max_err = max_weight_error_up_to_swap(model, rec.to_model());
      if (!rec.complete()) row.reason = "partial recovery";
    } catch (const Error& e) {
      row.max_err = std::numeric_limits<double>::quiet_NaN();
      row.reason = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    row.runtime_ms = spec.omit_runtime ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
    report.rows[i] = row;
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  return report;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw Error(fmt::format("unknown report format '{}'", name));
}

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = "n,delta,p_min,alpha,M,seed,max_err,runtime_ms,bound\n";
    for (const auto& r : report.rows)
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.n, num(r.delta_sep), num(r.p_min), num(r.alpha),
                         m_text(r.m), r.seed, num(r.max_err), num(r.runtime_ms), num(r.bound));
    return out;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = {{"n", r.n},
                          {"delta", num_json(r.delta_sep)},
                          {"p_min", num_json(r.p_min)},
                          {"alpha", num_json(r.alpha)},
                          {"M", r.m == kExactM ? nlohmann::json("inf") : nlohmann::json(r.m)},
                          {"seed", r.seed},
                          {"max_err", num_json(r.max_err)},
                          {"runtime_ms", num_json(r.runtime_ms)},
                          {"bound", num_json(r.bound)}};
    if (!r.reason.empty()) row["reason"] = r.reason;
    rows.push_back(row);
  }
  return rows.dump(2) + "\n";
}

void apply_setting(ExperimentSpec& spec, const std::string& key_in, const std::string& value) {
  const std::string key = trim(key_in);
  if (key == "model") spec.model_path = unquote(value);
  else if (key == "n") spec.n = static_cast<int>(to_count(key, value));
  else if (key == "topology") spec.topology.kind = parse_topology(unquote(value));
  else if (key == "p_edge") spec.topology.p_edge = to_double(key, value);
  else if (key == "w_lo") spec.weights.lo = to_double(key, value);
  else if (key == "w_hi") spec.weights.hi = to_double(key, value);
  else if (key == "min_delta") spec.min_delta = to_double(key, value);
  else if (key == "alpha") spec.alpha = to_double(key, value);
  else if (key == "model_seed") spec.model_seed = to_count(key, value);
  else if (key == "out_degree") spec.out_degree = static_cast<int>(to_count(key, value));
  else if (key == "M_grid") {
    spec.m_grid.clear();
    for (const auto& item : to_list(value)) spec.m_grid.push_back(to_count(key, item));
  } else if (key == "seeds") {
    spec.seeds.clear();
    for (const auto& item : to_list(value)) spec.seeds.push_back(to_count(key, item));
  } else if (key == "seed_count") {
    spec.seeds.clear();
    for (std::uint64_t s = 1; s <= to_count(key, value); ++s) spec.seeds.push_back(s);
  } else if (key == "epsilon") spec.epsilon_target = to_double(key, value);
  else if (key == "delta") spec.delta = to_double(key, value);
  else if (key == "mode") spec.mode = parse_mode(unquote(value));
  else if (key == "threshold") spec.edge_threshold = to_double(key, value);
  else if (key == "workers") spec.workers = static_cast<int>(to_count(key, value));
  else if (key == "omit_runtime") spec.omit_runtime = to_bool(key, value);
  else throw Error(fmt::format("unknown experiment setting '{}'", key));
}

ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec spec;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(fmt::format("spec line {}: expected key = value", line_no));
    try {
      apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(fmt::format("spec line {}: {}", line_no, e.what()));
    }
  }
  return spec;
}

}  // namespace cascademix
