#include "cascademix/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include <fmt/core.h>

#include "cascademix/rng.hpp"

namespace cascademix {

namespace {

constexpr int kRetryCap = 10000;

// Weakly connected components over the edge set; returns component id per vertex.
std::vector<int> components(int n, const std::map<VertexPair, WeightPair>& edges) {
  std::vector<std::vector<Vertex>> adj(n);
  for (const auto& [e, w] : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (Vertex s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<Vertex> frontier;
    frontier.push(s);
    comp[s] = next;
    while (!frontier.empty()) {
      Vertex x = frontier.front();
      frontier.pop();
      for (Vertex y : adj[x]) {
        if (comp[y] < 0) {
          comp[y] = next;
          frontier.push(y);
        }
      }
    }
    ++next;
  }
  return comp;
}

WeightPair draw_weights(Stream& rng, WeightRange range, double min_delta) {
  for (int attempt = 0; attempt < kRetryCap; ++attempt) {
    double p = range.lo + (range.hi - range.lo) * rng.uniform();
    double q = range.lo + (range.hi - range.lo) * rng.uniform();
    if (std::abs(p - q) >= min_delta) return {p, q};
  }
  throw Error("generation failed: could not draw weights with the requested separation");
}

void check_generation_args(int n, WeightRange range, double min_delta, double alpha) {
  if (n < 2) throw Error("generation failed: need at least two vertices");
  if (!(range.lo > 0.0 && range.lo <= range.hi && range.hi < 1.0))
    throw Error("generation failed: weight range must satisfy 0 < lo <= hi < 1");
  if (!(min_delta >= 0.0) || (min_delta > 0.0 && min_delta >= range.hi - range.lo))
    throw Error("generation failed: separation infeasible for the weight range");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("generation failed: alpha must lie in (0, 1)");
}

}  // namespace

MixtureModel::MixtureModel(int n_vertices, double alpha, bool directed)
    : n_(n_vertices), alpha_(alpha), directed_(directed) {
  if (n_vertices < 2) throw Error("a mixture needs at least two vertices");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
}

void MixtureModel::check_vertex(Vertex v) const {
  if (v < 0 || v >= n_) throw Error(fmt::format("vertex {} out of range [0, {})", v, n_));
}

void MixtureModel::set_edge(Vertex u, Vertex v, WeightPair w) {
  check_vertex(u);
  check_vertex(v);
  if (u == v) throw Error("self loops are not allowed");
  if (!(w.p >= 0.0 && w.p <= 1.0 && w.q >= 0.0 && w.q <= 1.0))
    throw Error(fmt::format("weights of edge ({}, {}) must lie in [0, 1]", u, v));
  auto key = edge_key(u, v, directed_);
  if (w.is_edge())
    edges_[key] = w;
  else
    edges_.erase(key);
}

WeightPair MixtureModel::weight(Vertex u, Vertex v) const {
  auto it = edges_.find(edge_key(u, v, directed_));
  return it == edges_.end() ? WeightPair{} : it->second;
}

bool MixtureModel::has_edge(Vertex u, Vertex v) const {
  return edges_.count(edge_key(u, v, directed_)) > 0;
}

std::vector<std::vector<Vertex>> MixtureModel::adjacency() const {
  std::vector<std::vector<Vertex>> adj(n_);
  for (const auto& [e, w] : edges_) {
    adj[e.u].push_back(e.v);
    if (!directed_) adj[e.v].push_back(e.u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

SeparationStats separation_stats(const MixtureModel& model) {
  if (model.edges().empty()) throw Error("empty graph");
  SeparationStats stats;
  for (const auto& [e, w] : model.edges()) {
    if (w.p > 0.0 && w.q > 0.0) stats.delta = std::min(stats.delta, std::abs(w.p - w.q));
    if (w.p > 0.0) stats.p_min = std::min(stats.p_min, w.p);
    if (w.q > 0.0) stats.p_min = std::min(stats.p_min, w.q);
  }
  return stats;
}

ConditionReport validate_conditions(const MixtureModel& model) {
  ConditionReport report;
  report.edge_count = model.edge_count();
  auto comp = components(model.n_vertices(), model.edges());
  std::set<int> seen{comp[0]};
  for (Vertex v = 1; v < model.n_vertices(); ++v) {
    if (seen.insert(comp[v]).second) report.offending_items.push_back({0, v});
  }
  report.connected = seen.size() == 1;
  if (!model.edges().empty()) {
    auto stats = separation_stats(model);
    report.delta = stats.delta;
    report.p_min = stats.p_min;
  }
  for (const auto& [e, w] : model.edges()) {
    if (w.p > 0.0 && w.q > 0.0 && w.p == w.q) report.offending_items.push_back(e);
  }
  report.condition1_ok = report.connected && report.edge_count >= 3;
  report.condition2_ok = report.delta > 0.0;
  return report;
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::line: return "line";
    case TopologyKind::star: return "star";
    case TopologyKind::cycle: return "cycle";
    case TopologyKind::tree: return "tree";
    case TopologyKind::erdos_renyi: return "erdos_renyi";
  }
  return "?";
}

TopologyKind parse_topology(const std::string& name) {
  for (auto k : {TopologyKind::line, TopologyKind::star, TopologyKind::cycle, TopologyKind::tree,
                 TopologyKind::erdos_renyi}) {
    if (to_string(k) == name) return k;
  }
  if (name == "sparse" || name == "er") return TopologyKind::erdos_renyi;
  throw Error(fmt::format("unknown topology '{}'", name));
}

MixtureModel random_mixture(int n, Topology topology, WeightRange weights, double min_delta,
                            double alpha, std::uint64_t seed) {
  check_generation_args(n, weights, min_delta, alpha);
  Stream rng(mix64(seed ^ 0x5bd1e9955bd1e995ULL));

  std::vector<VertexPair> pairs;
  switch (topology.kind) {
    case TopologyKind::line:
      for (Vertex v = 1; v < n; ++v) pairs.push_back({v - 1, v});
      break;
    case TopologyKind::star:
      for (Vertex v = 1; v < n; ++v) pairs.push_back({0, v});
      break;
    case TopologyKind::cycle:
      for (Vertex v = 1; v < n; ++v) pairs.push_back({v - 1, v});
      if (n >= 3) pairs.push_back({0, n - 1});
      break;
    case TopologyKind::tree:
      for (Vertex v = 1; v < n; ++v) {
        auto parent = static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(v)));
        pairs.push_back({parent, v});
      }
      break;
    case TopologyKind::erdos_renyi: {
      bool found = false;
      for (int attempt = 0; attempt < kRetryCap && !found; ++attempt) {
        pairs.clear();
        std::map<VertexPair, WeightPair> probe;
        for (Vertex u = 0; u < n; ++u)
          for (Vertex v = u + 1; v < n; ++v)
            if (rng.bernoulli(topology.p_edge)) {
              pairs.push_back({u, v});
              probe[{u, v}] = {1.0, 1.0};
            }
        auto comp = components(n, probe);
        found = pairs.size() >= 3 &&
                std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
      }
      if (!found) throw Error("generation failed: no connected random graph found");
      break;
    }
  }
  if (pairs.size() < 3)
    throw Error(fmt::format("generation failed: {} on {} vertices has fewer than three edges",
                            to_string(topology.kind), n));

  MixtureModel model(n, alpha, false);
  for (auto e : pairs) model.set_edge(e.u, e.v, draw_weights(rng, weights, min_delta));
  auto report = validate_conditions(model);
  if (!report.condition1_ok || !report.condition2_ok) throw Error("generation failed");
  return model;
}

MixtureModel random_directed_mixture(int n, int out_degree, WeightRange weights, double min_delta,
                                     double alpha, std::uint64_t seed) {
  check_generation_args(n, weights, min_delta, alpha);
  if (out_degree < 1 || out_degree > n - 1)
    throw Error("generation failed: out-degree must lie in [1, n - 1]");
  Stream rng(mix64(seed ^ 0x27d4eb2f165667c5ULL));
  MixtureModel model(n, alpha, true);
  for (Vertex u = 0; u < n; ++u) {
    std::vector<Vertex> others;
    for (Vertex v = 0; v < n; ++v)
      if (v != u) others.push_back(v);
    for (int k = 0; k < out_degree; ++k) {
      auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(others.size() - k)));
      std::swap(others[k], others[j]);
      model.set_edge(u, others[k], draw_weights(rng, weights, min_delta));
    }
  }
  auto report = validate_conditions(model);
  if (!report.condition1_ok || !report.condition2_ok) throw Error("generation failed");
  return model;
}

double max_weight_error(const MixtureModel& truth, const MixtureModel& estimate) {
  std::set<VertexPair> keys;
  for (const auto& [e, w] : truth.edges()) keys.insert(e);
  for (const auto& [e, w] : estimate.edges()) keys.insert(e);
  double err = 0.0;
  for (auto e : keys) {
    auto a = truth.weight(e.u, e.v);
    auto b = estimate.weight(e.u, e.v);
    err = std::max({err, std::abs(a.p - b.p), std::abs(a.q - b.q)});
  }
  return err;
}

double max_weight_error_up_to_swap(const MixtureModel& truth, const MixtureModel& estimate) {
  MixtureModel swapped(estimate.n_vertices(), 1.0 - estimate.alpha(), estimate.directed());
  for (const auto& [e, w] : estimate.edges()) swapped.set_edge(e.u, e.v, {w.q, w.p});
  return std::min(max_weight_error(truth, estimate), max_weight_error(truth, swapped));
}

}  // namespace cascademix
