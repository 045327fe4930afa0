// cascademix: simulate, enumerate, estimate and recover two-component
// cascade mixtures.

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/core.h>

#include "CLI11.hpp"

#include "cascademix/cascade.hpp"
#include "cascademix/experiment.hpp"
#include "cascademix/io.hpp"
#include "cascademix/moments.hpp"
#include "cascademix/oracle.hpp"
#include "cascademix/recovery.hpp"

namespace cm = cascademix;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cm::Error(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    cm::write_text_file(path, text);
}

cm::EdgeSet read_edges(const std::string& path) {
  auto doc = cm::read_json_file(path);
  cm::EdgeSet edges;
  try {
    const auto& list = doc.is_object() ? doc.at("edges") : doc;
    for (const auto& e : list) edges.insert({e.at(0).get<cm::Vertex>(), e.at(1).get<cm::Vertex>()});
  } catch (const nlohmann::json::exception& e) {
    throw cm::Error(fmt::format("bad edge list '{}': {}", path, e.what()));
  }
  return edges;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-component cascade mixtures: simulation, exact oracle, moment estimation, recovery"};
  app.set_version_flag("--version", std::string("cascademix ") + kVersion);
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a random model satisfying both recoverability conditions");
  int g_n = 4, g_out_degree = 3;
  std::string g_topology = "star", g_out;
  double g_p_edge = 0.4, g_lo = 0.2, g_hi = 0.8, g_min_delta = 0.2, g_alpha = 0.5;
  std::uint64_t g_seed = 1;
  bool g_directed = false;
  gen->add_option("--n", g_n, "vertex count");
  gen->add_option("--topology", g_topology, "line, star, cycle, tree or erdos_renyi");
  gen->add_option("--p-edge", g_p_edge, "edge probability for erdos_renyi");
  gen->add_option("--w-lo", g_lo);
  gen->add_option("--w-hi", g_hi);
  gen->add_option("--min-delta", g_min_delta);
  gen->add_option("--alpha", g_alpha);
  gen->add_option("--seed", g_seed);
  gen->add_flag("--directed", g_directed, "directed model with fixed out-degree");
  gen->add_option("--out-degree", g_out_degree);
  gen->add_option("--out", g_out, "model file (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a cascade corpus");
  std::string s_model, s_out, s_labels;
  std::uint64_t s_count = 0, s_seed = 0;
  int s_workers = 1;
  sim->add_option("--model", s_model)->required();
  sim->add_option("--count", s_count)->required();
  sim->add_option("--seed", s_seed)->required();
  sim->add_option("--out", s_out, "corpus file (default stdout)");
  sim->add_option("--workers", s_workers);
  sim->add_option("--with-labels", s_labels, "write hidden component labels here");

  // oracle
  auto* orc = app.add_subcommand("oracle", "Exact moments and distributions by enumeration");
  std::string o_model, o_dump, o_table, o_mode;
  std::vector<std::string> o_queries;
  orc->add_option("--model", o_model)->required();
  orc->add_option("--query", o_queries, "e.g. \"Y_star 0 1 2\"");
  orc->add_option("--dump-dist", o_dump, "write the full distribution as JSON");
  orc->add_option("--table", o_table, "write the exact moment table recovery needs");
  orc->add_option("--mode", o_mode, "balanced, general_alpha or directed");

  // estimate
  auto* est = app.add_subcommand("estimate", "Count-based moment table from a corpus");
  std::string e_corpus, e_edges, e_out, e_mode = "balanced";
  double e_threshold = 0.05;
  int e_workers = 1;
  bool e_directed = false;
  est->add_option("--corpus", e_corpus)->required();
  est->add_option("--edges", e_edges, "edge list [[u,v],...]; learned from X moments when omitted");
  est->add_option("--mode", e_mode);
  est->add_option("--threshold", e_threshold, "edge threshold when --edges is omitted");
  est->add_option("--out", e_out);
  est->add_option("--workers", e_workers);
  est->add_flag("--directed", e_directed);

  // recover
  auto* rec = app.add_subcommand("recover", "Recover both components from a moment table");
  std::string r_moments, r_out, r_mode;
  double r_alpha = 0.5, r_threshold = 0.0;
  bool r_estimate = false, r_directed = false;
  rec->add_option("--moments", r_moments)->required();
  auto* r_alpha_opt = rec->add_option("--alpha", r_alpha, "known mixing prior");
  auto* r_est_opt = rec->add_flag("--estimate-alpha", r_estimate);
  r_alpha_opt->excludes(r_est_opt);
  rec->add_flag("--directed", r_directed);
  rec->add_option("--mode", r_mode);
  auto* r_thr_opt = rec->add_option("--threshold", r_threshold, "edge threshold");
  rec->add_option("--out", r_out);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Sample-complexity sweep");
  std::string x_spec, x_out, x_format = "csv";
  std::vector<std::string> x_set;
  int x_workers = 0;
  bool x_omit = false;
  exp->add_option("--spec", x_spec)->required();
  exp->add_option("--out", x_out);
  exp->add_option("--format", x_format, "csv or json");
  exp->add_option("--workers", x_workers);
  exp->add_flag("--omit-runtime", x_omit, "write runtime_ms as 0");
  exp->add_option("--set", x_set, "override a spec setting, key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cm::WeightRange w{g_lo, g_hi};
      auto model = g_directed
                       ? cm::random_directed_mixture(g_n, g_out_degree, w, g_min_delta, g_alpha, g_seed)
                       : cm::random_mixture(g_n, {cm::parse_topology(g_topology), g_p_edge}, w, g_min_delta,
                                            g_alpha, g_seed);
      emit(g_out, cm::model_to_json(model).dump(2) + "\n");
      return 0;
    }

    if (sim->parsed()) {
      auto model = cm::read_model_file(s_model);
      auto corpus = cm::run_corpus(model, s_count, s_seed, s_workers, !s_labels.empty());
      std::ostringstream out;
      cm::write_corpus(out, corpus);
      emit(s_out, out.str());
      if (!s_labels.empty()) {
        std::ostringstream lab;
        cm::write_labels(lab, corpus);
        cm::write_text_file(s_labels, lab.str());
      }
      return 0;
    }

    if (orc->parsed()) {
      auto model = cm::read_model_file(o_model);
      auto dist = cm::enumerate_distribution(model);
      for (const auto& text : o_queries) {
        auto q = cm::parse_query(text);
        std::cout << fmt::format("{}\n", cm::exact_moment(dist, q));
      }
      if (!o_dump.empty()) cm::write_text_file(o_dump, cm::distribution_to_json(dist).dump(2) + "\n");
      if (!o_table.empty()) {
        auto mode = o_mode.empty() ? (model.directed() ? cm::RecoveryMode::directed : cm::RecoveryMode::balanced)
                                   : cm::parse_mode(o_mode);
        auto table = cm::exact_table(dist, cm::recovery_queries(model, mode), model.directed());
        cm::write_text_file(o_table, cm::table_to_json(table).dump(2) + "\n");
      }
      if (o_queries.empty() && o_dump.empty() && o_table.empty())
        std::cout << fmt::format("{} atoms, total mass {}\n", dist.atoms.size(), dist.total_mass());
      return 0;
    }

    if (est->parsed()) {
      std::ifstream in(e_corpus);
      if (!in) throw cm::Error(fmt::format("cannot open '{}'", e_corpus));
      auto corpus = cm::read_corpus(in);
      auto mode = cm::parse_mode(e_mode);
      const bool directed = e_directed || mode == cm::RecoveryMode::directed;
      auto pairs = cm::all_pair_queries(corpus.n_vertices);
      cm::EdgeSet edges;
      if (!e_edges.empty()) {
        edges = read_edges(e_edges);
      } else {
        auto first = cm::build_table(corpus, pairs, e_workers);
        first.directed = directed;
        edges = cm::learn_edges(first, e_threshold);
      }
      auto queries = pairs;
      std::set<cm::EventQuery> seen(queries.begin(), queries.end());
      for (const auto& q : cm::required_queries(corpus.n_vertices, edges, mode))
        if (seen.insert(q).second) queries.push_back(q);
      auto table = cm::build_table(corpus, queries, e_workers);
      table.directed = directed;
      emit(e_out, cm::table_to_json(table).dump(2) + "\n");
      return 0;
    }

    if (rec->parsed()) {
      auto table = cm::table_from_json(cm::read_json_file(r_moments));
      cm::RecoverRequest req;
      if (!r_mode.empty()) req.mode = cm::parse_mode(r_mode);
      if (r_directed || table.directed) req.mode = cm::RecoveryMode::directed;
      if (r_alpha_opt->count()) {
        req.alpha = r_alpha;
        if (req.mode == cm::RecoveryMode::balanced && r_alpha != 0.5) req.mode = cm::RecoveryMode::general_alpha;
      }
      req.estimate_alpha = r_estimate;
      cm::RecoveryOptions opts;
      if (r_thr_opt->count()) opts.edge_threshold = r_threshold;
      auto result = cm::recover(table, req, opts);
      emit(r_out, cm::recovered_to_json(result).dump(2) + "\n");
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      return result.complete() ? 0 : 2;
    }

    if (exp->parsed()) {
      auto spec = cm::parse_spec(read_text(x_spec));
      for (const auto& kv : x_set) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw cm::Error(fmt::format("--set expects key=value, got '{}'", kv));
        cm::apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (x_workers > 0) spec.workers = x_workers;
      if (x_omit) spec.omit_runtime = true;
      auto report = cm::run_experiment(spec);
      emit(x_out, cm::emit_report(report, cm::parse_format(x_format)));
      for (const auto& r : report.rows)
        if (!r.reason.empty())
          std::cerr << fmt::format("M={} seed={}: {}\n", r.m == cm::kExactM ? "inf" : std::to_string(r.m), r.seed,
                                   r.reason);
      return report.has_failures() ? 2 : 0;
    }
  } catch (const cm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
