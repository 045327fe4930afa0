#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "recovery_internal.hpp"

namespace cascademix {

using detail::MomentView;

namespace {

struct Frame {
  bool solved = false;
  std::map<Vertex, double> gap;  // out-neighbour -> local p - q
};

struct Candidate {
  Vertex x = -1;     // vertex being labelled
  Vertex from = -1;  // labelled vertex it is compared with
  Vertex first = 0, middle = 0, last = 0;
  bool triangle = false;
  bool x_is_first = false;
  PathWeights w;
  double score = -1.0;
};

}  // namespace

RecoveredMixture recover_directed(const MomentTable& table, const RecoveryOptions& opts) {
  if (!table.directed) throw Error("directed recovery needs a directed moment table");
  MomentView m(table, opts);
  const int n = table.n_vertices;
  const auto edges = learn_edges(table, default_edge_threshold(table, opts));
  const auto out_adj = detail::adjacency_of(n, edges, true);
  for (Vertex u = 0; u < n; ++u)
    if (out_adj[u].size() < 3)
      throw Error(fmt::format("Condition violated: vertex {} has out-degree {} (at least three needed)", u,
                              out_adj[u].size()));
  auto has = [&](Vertex a, Vertex b) { return edges.count({a, b}) > 0; };

  RecoveredMixture out;
  out.n_vertices = n;
  out.directed = true;
  out.alpha_used = 0.5;

  std::vector<Frame> frame(n);
  for (Vertex u = 0; u < n; ++u) {
    try {
      auto s = detail::solve_star(m, u, out_adj[u], 0.5, -1, 1);
      frame[u].solved = true;
      for (std::size_t i = 0; i < s.legs.size(); ++i) frame[u].gap[s.legs[i]] = s.gap[i];
    } catch (const Error& e) {
      out.warnings.push_back(e.what());
    }
  }

  auto local = [&](Vertex u, Vertex v) -> WeightPair {
    if (!has(u, v)) return {};
    const double x = m.x(u, v);
    const double d = frame[u].gap.at(v);
    return {x + 0.5 * d, x - 0.5 * d};
  };

  std::vector<int> sigma(n, 0);
  auto best_candidate = [&]() {
    Candidate best;
    for (Vertex x = 0; x < n; ++x) {
      if (sigma[x] || !frame[x].solved) continue;
      auto consider = [&](Candidate c) {
        const auto q = c.triangle ? EventQuery::triangle_path(c.first, c.middle, c.last)
                                  : EventQuery::path(c.first, c.middle, c.last);
        if (!table.has(q)) return;
        const double diff = std::abs(path_moment(c.w, 0.5, false) - path_moment(c.w, 0.5, true));
        c.score = diff / m.tol_entry(q);
        if (c.score > best.score) best = c;
      };
      for (Vertex a = 0; a < n; ++a) {
        if (!sigma[a]) continue;
        if (has(a, x))
          for (Vertex b : out_adj[x]) {
            if (b == a) continue;
            consider({x, a, a, x, b, has(a, b), false, {local(a, x), local(a, b), local(x, b)}});
          }
        if (has(x, a))
          for (Vertex b : out_adj[a]) {
            if (b == x) continue;
            consider({x, a, x, a, b, has(x, b), true, {local(x, a), local(x, b), local(a, b)}});
          }
      }
    }
    return best;
  };

  while (true) {
    Candidate c = best_candidate();
    if (c.x >= 0 && c.score > 1.0) {
      bool aligned = c.triangle ? check_triangle(table, c.first, c.middle, c.last, c.w, opts)
                                : check_path(table, c.first, c.middle, c.last, c.w, opts);
      (c.triangle ? out.triangle_checks : out.path_checks) += 1;
      sigma[c.x] = aligned ? sigma[c.from] : -sigma[c.from];
      out.learned_order.push_back(c.x);
      continue;
    }
    Vertex root = -1;
    for (Vertex u = 0; u < n && root < 0; ++u)
      if (!sigma[u] && frame[u].solved) root = u;
    if (root < 0) break;
    if (!out.learned_order.empty())
      out.warnings.push_back(fmt::format("pairing ambiguous at vertex {}: labelled independently", root));
    sigma[root] = 1;
    out.learned_order.push_back(root);
    if (!out.anchor) {
      auto top = std::max_element(frame[root].gap.begin(), frame[root].gap.end(),
                                  [](const auto& a, const auto& b) { return std::abs(a.second) < std::abs(b.second); });
      out.anchor = VertexPair{root, top->first};
    }
  }

  for (auto e : edges) {
    if (frame[e.u].solved) {
      out.edges[e] = detail::make_edge(e.u, e.v, m.x(e.u, e.v), sigma[e.u] * frame[e.u].gap.at(e.v), 0.5,
                                       EdgeMethod::star);
    } else {
      out.edges[e] = detail::make_edge(e.u, e.v, m.x(e.u, e.v), 0.0, 0.5, EdgeMethod::nondistinct_failed);
      out.warnings.push_back(fmt::format("edge ({},{}) could not be resolved", e.u, e.v));
    }
  }
  return out;
}

bool RecoveredMixture::complete() const {
  return std::none_of(edges.begin(), edges.end(),
                      [](const auto& kv) { return kv.second.method == EdgeMethod::nondistinct_failed; });
}

MixtureModel RecoveredMixture::to_model() const {
  MixtureModel model(n_vertices, alpha_used, directed);
  for (const auto& [k, e] : edges) model.set_edge(k.u, k.v, {e.p_hat, e.q_hat});
  return model;
}

double predicted_moment(const MixtureModel& model, const EventQuery& q) {
  const auto& v = q.v;
  double result = 0.0;
  for (int label = 1; label <= 2; ++label) {
    auto P = [&](Vertex i, Vertex j) {
      auto w = model.weight(i, j);
      return label == 1 ? w.p : w.q;
    };
    double f = 0.0;
    switch (q.kind) {
      case QueryKind::X: f = P(v[0], v[1]); break;
      case QueryKind::Y_star: f = P(v[0], v[1]) * P(v[0], v[2]); break;
      case QueryKind::Z_star: f = P(v[0], v[1]) * P(v[0], v[2]) * P(v[0], v[3]); break;
      case QueryKind::Y_line: f = P(v[0], v[1]) * (1.0 - P(v[0], v[2])) * P(v[1], v[2]); break;
      case QueryKind::Z_line:
        f = P(v[0], v[1]) * P(v[0], v[2]) * (1.0 - P(v[0], v[3])) * P(v[2], v[3]);
        break;
      case QueryKind::Path:
      case QueryKind::TrianglePath: f = P(v[0], v[1]) * (1.0 - P(v[0], v[2])) * P(v[1], v[2]); break;
    }
    result += (label == 1 ? model.alpha() : 1.0 - model.alpha()) * f;
  }
  return result;
}

double moment_residual(const MomentTable& table, const MixtureModel& model) {
  double worst = 0.0;
  for (const auto& [q, e] : table.entries)
    if (e.present()) worst = std::max(worst, std::abs(predicted_moment(model, q) - e.value));
  return worst;
}

nlohmann::json recovered_to_json(const RecoveredMixture& r) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [k, e] : r.edges) edges.push_back({k.u, k.v, e.p_hat, e.q_hat, to_string(e.method)});
  nlohmann::json doc = {{"n", r.n_vertices},
                        {"directed", r.directed},
                        {"alpha", r.alpha_used},
                        {"anchor", r.anchor ? nlohmann::json{r.anchor->u, r.anchor->v} : nlohmann::json(nullptr)},
                        {"edges", edges},
                        {"learned_order", r.learned_order},
                        {"warnings", r.warnings}};
  if (r.directed) {
    doc["path_checks"] = r.path_checks;
    doc["triangle_checks"] = r.triangle_checks;
  }
  return doc;
}

}  // namespace cascademix
