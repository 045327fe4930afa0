#include "cascademix/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/core.h>

namespace cascademix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using EventList = std::vector<VertexPair>;

EventList event_pairs(const Cascade& c) {
  EventList out;
  out.reserve(c.events.size());
  for (const auto& e : c.events) out.push_back({e.infector, e.infectee});
  std::sort(out.begin(), out.end());
  return out;
}

bool contains_all(const EventList& events, const std::vector<VertexPair>& need) {
  for (auto p : need)
    if (!std::binary_search(events.begin(), events.end(), p)) return false;
  return true;
}

struct SourceQueries {
  std::vector<std::size_t> index;
  std::vector<std::vector<VertexPair>> events;
};

std::vector<SourceQueries> group_by_source(int n, const std::vector<EventQuery>& queries) {
  std::vector<SourceQueries> groups(n);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto s = queries[i].source();
    if (s < 0 || s >= n)
      throw Error(fmt::format("query '{}' names a vertex outside [0, {})", to_string(queries[i]), n));
    groups[s].index.push_back(i);
    groups[s].events.push_back(queries[i].required_events());
  }
  return groups;
}

void add_unique(std::vector<EventQuery>& out, std::set<EventQuery>& seen, const EventQuery& q) {
  if (seen.insert(q).second) out.push_back(q);
}

std::vector<std::vector<Vertex>> neighbor_lists(int n, const EdgeSet& edges, bool directed) {
  std::vector<std::vector<Vertex>> adj(n);
  for (auto e : edges) {
    adj[e.u].push_back(e.v);
    if (!directed) adj[e.v].push_back(e.u);
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

}  // namespace

bool MomentTable::has(const EventQuery& q) const {
  auto it = entries.find(q);
  return it != entries.end() && it->second.present();
}

double MomentTable::value(const EventQuery& q) const {
  auto it = entries.find(q);
  if (it == entries.end()) throw Error(fmt::format("missing moment '{}'", to_string(q)));
  if (!it->second.present())
    throw Error(fmt::format("missing moment '{}': no conditioning samples", to_string(q)));
  return it->second.value;
}

double MomentTable::sigma(const EventQuery& q) const {
  if (exact()) return 0.0;
  auto it = entries.find(q);
  if (it == entries.end() || it->second.den == 0) return std::numeric_limits<double>::infinity();
  const double v = it->second.value;
  return std::sqrt(std::max(v * (1.0 - v), 0.0) / static_cast<double>(it->second.den));
}

CountResult estimate(const CascadeCorpus& corpus, const EventQuery& q) {
  CountResult r;
  const auto need = q.required_events();
  for (const auto& c : corpus.cascades) {
    if (c.source != q.source()) continue;
    ++r.den;
    bool all = true;
    for (auto p : need) all = all && c.has_event(p.u, p.v);
    if (all) ++r.num;
  }
  if (r.den == 0) throw Error(fmt::format("no conditioning samples for '{}'", to_string(q)));
  r.value = static_cast<double>(r.num) / static_cast<double>(r.den);
  return r;
}

MomentTable build_table(const CascadeCorpus& corpus, const std::vector<EventQuery>& queries,
                        int workers) {
  if (queries.empty()) throw Error("no queries requested");
  const int n = corpus.n_vertices;
  const auto groups = group_by_source(n, queries);

  for (const auto& c : corpus.cascades)
    if (c.source < 0 || c.source >= n) throw Error("cascade source outside vertex range");

  struct Counters {
    std::vector<std::uint64_t> num;
    std::vector<std::uint64_t> den;
  };
  const std::size_t m = corpus.size();
  const std::size_t shards = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                     std::max<std::size_t>(m, 1));
  std::vector<Counters> partial(shards, Counters{std::vector<std::uint64_t>(queries.size(), 0),
                                                 std::vector<std::uint64_t>(n, 0)});
  auto work = [&](std::size_t shard) {
    auto& cnt = partial[shard];
    for (std::size_t i = m * shard / shards; i < m * (shard + 1) / shards; ++i) {
      const auto& c = corpus.cascades[i];
      ++cnt.den[c.source];
      const auto& g = groups[c.source];
      if (g.index.empty()) continue;
      const auto events = event_pairs(c);
      for (std::size_t k = 0; k < g.index.size(); ++k)
        if (contains_all(events, g.events[k])) ++cnt.num[g.index[k]];
    }
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t s = 0; s < shards; ++s) pool.emplace_back(work, s);
    for (auto& t : pool) t.join();
  }

  MomentTable table;
  table.n_vertices = n;
  table.provenance = Provenance::empirical;
  table.sample_count = m;
  table.seed = corpus.seed;
  table.source_counts.assign(n, 0);
  std::vector<std::uint64_t> num(queries.size(), 0);
  for (const auto& cnt : partial) {
    for (int s = 0; s < n; ++s) table.source_counts[s] += cnt.den[s];
    for (std::size_t k = 0; k < queries.size(); ++k) num[k] += cnt.num[k];
  }
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const auto den = table.source_counts[queries[k].source()];
    MomentEntry e{kNaN, num[k], den};
    if (den > 0) e.value = static_cast<double>(num[k]) / static_cast<double>(den);
    table.entries[queries[k]] = e;
  }
  return table;
}

MomentTable exact_table(const OutcomeDistribution& dist, const std::vector<EventQuery>& queries,
                        bool directed) {
  const int n = dist.n_vertices;
  const auto groups = group_by_source(n, queries);
  std::vector<double> num(queries.size(), 0.0);
  std::vector<double> den(n, 0.0);
  for (const auto& [c, mass] : dist.atoms) {
    den[c.source] += mass;
    const auto& g = groups[c.source];
    if (g.index.empty()) continue;
    const auto events = event_pairs(c);
    for (std::size_t k = 0; k < g.index.size(); ++k)
      if (contains_all(events, g.events[k])) num[g.index[k]] += mass;
  }
  MomentTable table;
  table.n_vertices = n;
  table.directed = directed;
  table.provenance = Provenance::exact;
  table.source_counts.assign(n, 0);
  for (std::size_t k = 0; k < queries.size(); ++k)
    table.entries[queries[k]] = MomentEntry{num[k] / den[queries[k].source()], 0, 0};
  return table;
}

MomentTable exact_table(const MixtureModel& model, const std::vector<EventQuery>& queries) {
  return exact_table(enumerate_distribution(model), queries, model.directed());
}

std::string to_string(RecoveryMode mode) {
  switch (mode) {
    case RecoveryMode::balanced: return "balanced";
    case RecoveryMode::general_alpha: return "general_alpha";
    case RecoveryMode::directed: return "directed";
  }
  return "?";
}

RecoveryMode parse_mode(const std::string& name) {
  for (auto m : {RecoveryMode::balanced, RecoveryMode::general_alpha, RecoveryMode::directed})
    if (to_string(m) == name) return m;
  throw Error(fmt::format("unknown mode '{}'", name));
}

std::vector<EventQuery> all_pair_queries(int n) {
  std::vector<EventQuery> out;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex a = 0; a < n; ++a)
      if (a != u) out.push_back(EventQuery::x(u, a));
  return out;
}

std::vector<EventQuery> star_queries(Vertex u, const std::vector<Vertex>& neighbors) {
  std::vector<EventQuery> out;
  for (Vertex a : neighbors) out.push_back(EventQuery::x(u, a));
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    for (std::size_t j = i + 1; j < neighbors.size(); ++j)
      out.push_back(EventQuery::y_star(u, neighbors[i], neighbors[j]));
  return out;
}

std::vector<EventQuery> line_queries(Vertex a, Vertex u, Vertex b, Vertex c) {
  return {EventQuery::x(u, a),         EventQuery::x(u, b),         EventQuery::x(b, c),
          EventQuery::y_star(u, a, b), EventQuery::y_line(u, b, c), EventQuery::z_line(u, a, b, c)};
}

std::vector<EventQuery> required_queries(int n, const EdgeSet& edges, RecoveryMode mode) {
  const bool directed = mode == RecoveryMode::directed;
  const auto adj = neighbor_lists(n, edges, directed);
  std::vector<EventQuery> out;
  std::set<EventQuery> seen;
  auto add = [&](const EventQuery& q) { add_unique(out, seen, q); };

  for (Vertex u = 0; u < n; ++u) {
    for (const auto& q : star_queries(u, adj[u])) add(q);
    if (!directed)
      for (Vertex a : adj[u]) add(EventQuery::x(a, u));
  }

  if (directed) {
    for (Vertex a = 0; a < n; ++a)
      for (Vertex u : adj[a])
        for (Vertex b : adj[u]) {
          if (b == a) continue;
          bool chord = std::binary_search(adj[a].begin(), adj[a].end(), b);
          add(chord ? EventQuery::triangle_path(a, u, b) : EventQuery::path(a, u, b));
        }
    return out;
  }

  for (Vertex u = 0; u < n; ++u) {
    const auto& nu = adj[u];
    for (Vertex a : nu)
      for (Vertex b : nu) {
        if (a == b) continue;
        for (Vertex c : adj[b]) {
          if (c == u || std::binary_search(nu.begin(), nu.end(), c)) continue;
          for (const auto& q : line_queries(a, u, b, c)) add(q);
          add(EventQuery::x(c, b));
        }
      }
    if (mode == RecoveryMode::general_alpha && nu.size() >= 3)
      for (std::size_t i = 0; i < nu.size(); ++i)
        for (std::size_t j = i + 1; j < nu.size(); ++j)
          for (std::size_t k = j + 1; k < nu.size(); ++k)
            add(EventQuery::z_star(u, nu[i], nu[j], nu[k]));
  }
  return out;
}

std::vector<EventQuery> recovery_queries(const MixtureModel& model, RecoveryMode mode) {
  EdgeSet edges;
  for (const auto& [e, w] : model.edges()) edges.insert(e);
  auto out = all_pair_queries(model.n_vertices());
  std::set<EventQuery> seen(out.begin(), out.end());
  for (const auto& q : required_queries(model.n_vertices(), edges, mode)) add_unique(out, seen, q);
  return out;
}

nlohmann::json table_to_json(const MomentTable& table) {
  nlohmann::json moments = nlohmann::json::object();
  for (const auto& [q, e] : table.entries) {
    nlohmann::json entry;
    entry["value"] = e.present() ? nlohmann::json(e.value) : nlohmann::json(nullptr);
    entry["num"] = table.exact() ? nlohmann::json(nullptr) : nlohmann::json(e.num);
    entry["den"] = table.exact() ? nlohmann::json(nullptr) : nlohmann::json(e.den);
    moments[to_string(q)] = entry;
  }
  nlohmann::json doc = {{"n", table.n_vertices},
                        {"directed", table.directed},
                        {"provenance", table.exact() ? "exact" : "empirical"},
                        {"moments", moments}};
  if (!table.exact()) {
    doc["M"] = table.sample_count;
    doc["seed"] = table.seed;
    doc["source_counts"] = table.source_counts;
  }
  return doc;
}

MomentTable table_from_json(const nlohmann::json& doc) {
  try {
    MomentTable table;
    table.n_vertices = doc.at("n").get<int>();
    table.directed = doc.value("directed", false);
    const auto prov = doc.at("provenance").get<std::string>();
    if (prov == "exact") {
      table.provenance = Provenance::exact;
      table.source_counts.assign(table.n_vertices, 0);
    } else if (prov == "empirical") {
      table.provenance = Provenance::empirical;
      table.sample_count = doc.at("M").get<std::uint64_t>();
      table.seed = doc.at("seed").get<std::uint64_t>();
      table.source_counts = doc.at("source_counts").get<std::vector<std::uint64_t>>();
    } else {
      throw Error(fmt::format("unknown provenance '{}'", prov));
    }
    for (const auto& [key, entry] : doc.at("moments").items()) {
      MomentEntry e;
      e.value = entry.at("value").is_null() ? kNaN : entry.at("value").get<double>();
      if (!table.exact()) {
        e.num = entry.at("num").get<std::uint64_t>();
        e.den = entry.at("den").get<std::uint64_t>();
      }
      table.entries[parse_query(key)] = e;
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("bad moment table: {}", e.what()));
  }
}

}  // namespace cascademix
