#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include <fmt/core.h>

#include "recovery_internal.hpp"

namespace cascademix {

using detail::MomentView;

namespace {

VertexPair ukey(Vertex u, Vertex v) { return edge_key(u, v, false); }

void require_condition1(int n, const EdgeSet& edges) {
  if (edges.size() < 3)
    throw Error(fmt::format("Condition 1 violated: {} edge(s) detected, at least three are needed",
                            edges.size()));
  const auto adj = detail::adjacency_of(n, edges, false);
  std::vector<char> seen(n, 0);
  std::queue<Vertex> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    Vertex x = frontier.front();
    frontier.pop();
    for (Vertex y : adj[x])
      if (!seen[y]) {
        seen[y] = 1;
        ++reached;
        frontier.push(y);
      }
  }
  if (reached != n)
    throw Error(fmt::format("Condition 1 violated: detected graph is disconnected ({} of {} vertices reachable from 0)",
                            reached, n));
}

// Signed gaps of the three edges of a triangle on vertices 0, 1, 2.
std::map<VertexPair, double> triangle_gaps(const MomentView& m, double alpha, int ref_sign) {
  const double ab = alpha * (1.0 - alpha);
  std::array<double, 3> C{};
  for (Vertex i = 0; i < 3; ++i) {
    Vertex j = (i + 1) % 3, k = (i + 2) % 3;
    C[i] = m.c_star(i, j, k);
    if (std::abs(C[i]) <= m.tol_c_star(i, j, k))
      throw Error(fmt::format("degenerate separation at ({},{},{})", i, std::min(j, k), std::max(j, k)));
  }
  // edge opposite vertex k joins i and j
  std::array<double, 3> mag{};
  for (Vertex k = 0; k < 3; ++k) {
    Vertex i = (k + 1) % 3, j = (k + 2) % 3;
    const double r = C[i] * C[j] / C[k];
    if (r < -m.options().tol) throw Error("degenerate separation in triangle: negative radicand");
    mag[k] = std::sqrt(std::max(r, 0.0) / ab);
  }
  const Vertex top = static_cast<Vertex>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  const Vertex i = (top + 1) % 3, j = (top + 2) % 3;
  std::array<int, 3> s{};
  s[top] = ref_sign;
  s[j] = s[top] * detail::sgn(C[i]);  // edge (i,top) shares vertex i with (i,j)
  s[i] = s[top] * detail::sgn(C[j]);  // edge (j,top) shares vertex j with (i,j)
  std::map<VertexPair, double> out;
  for (Vertex k = 0; k < 3; ++k) out[ukey((k + 1) % 3, (k + 2) % 3)] = s[k] * mag[k];
  return out;
}

class Engine {
 public:
  Engine(const MomentTable& table, const RecoveryOptions& opts, double alpha, bool general, int global_sign)
      : m_(table, opts), alpha_(alpha), general_(general), gsign_(global_sign), n_(table.n_vertices) {
    out_.n_vertices = n_;
    out_.alpha_used = alpha;
  }

  void set_edges(const EdgeSet& full, const EdgeSet& distinct) {
    full_ = full;
    fadj_ = detail::adjacency_of(n_, full, false);
    adj_ = detail::adjacency_of(n_, distinct, false);
    in_s_.assign(n_, 0);
  }

  RecoveredMixture run() {
    const auto& table = m_.table();
    if (table.directed) throw Error("undirected recovery needs an undirected moment table");
    auto full = learn_edges(table, default_edge_threshold(table, m_.options()));
    require_condition1(n_, full);
    if (n_ == 3) return triangle(full);

    EdgeSet distinct;
    for (auto e : full) {
      if (auto w = detect_nondistinct(table, full, e.u, e.v, m_.options())) {
        store(detail::make_edge(e.u, e.v, *w, 0.0, alpha_, EdgeMethod::nondistinct));
      } else {
        distinct.insert(e);
      }
    }
    set_edges(full, distinct);
    update_s();

    std::vector<char> seeded(n_, 0);
    while (true) {
      frontier_loop();
      auto comp = unseeded_component(seeded);
      if (comp.empty()) break;
      for (Vertex v : comp) seeded[v] = 1;
      if (out_.anchor)
        warn(fmt::format("component containing vertex {} is labelled independently of the anchor", comp.front()));
      try {
        seed(comp);
      } catch (const Error& e) {
        warn(e.what());
      }
      update_s();
    }
    finish();
    return out_;
  }

  // Learn2Nodes on the component `comp` of the distinct graph.
  std::pair<Vertex, Vertex> seed(const std::vector<Vertex>& comp) {
    Vertex u = comp.front();
    for (Vertex x : comp)
      if (deg(x) > deg(u)) u = x;
    if (deg(u) == 0) throw Error(fmt::format("vertex {} has no separated edges", u));
    Vertex v = adj_[u].front();
    for (Vertex x : adj_[u])
      if (deg(x) < deg(v)) v = x;

    if (deg(u) >= 3) {
      if (!try_star(u)) return fallback_seed(comp);
      if (deg(v) >= 3) {
        try_star(v);
      } else if (deg(v) == 2) {
        Vertex t = other(v, u);
        try_contexts(contexts_for(v, t, u));
      }
      return {u, v};
    }
    if (deg(u) < 2) throw Error(fmt::format("component containing {} has fewer than three separated edges", u));
    Vertex w = other(u, v);
    std::vector<LineContext> ctxs;
    if (deg(v) == 2) {
      for (Vertex t : adj_[v])
        if (t != u && !full_edge(u, t)) ctxs.push_back({w, u, v, t});
    }
    for (Vertex t : adj_[w])
      if (t != u && !full_edge(u, t)) ctxs.push_back({v, u, w, t});
    if (auto used = try_contexts(ctxs)) return {u, used->b};
    return fallback_seed(comp);
  }

  const std::map<VertexPair, RecoveredEdge>& known() const { return known_; }

 private:
  int deg(Vertex x) const { return static_cast<int>(adj_[x].size()); }

  Vertex other(Vertex x, Vertex not_this) const {
    for (Vertex y : adj_[x])
      if (y != not_this) return y;
    return not_this;
  }

  bool full_edge(Vertex x, Vertex y) const {
    return std::binary_search(fadj_[x].begin(), fadj_[x].end(), y);
  }

  bool is_known(Vertex x, Vertex y) const { return known_.count(ukey(x, y)) > 0; }

  void warn(std::string msg) {
    if (std::find(out_.warnings.begin(), out_.warnings.end(), msg) == out_.warnings.end())
      out_.warnings.push_back(std::move(msg));
  }

  void store(RecoveredEdge e) {
    auto k = ukey(e.u, e.v);
    e.u = k.u;
    e.v = k.v;
    known_[k] = e;
  }

  // Keeps existing values; flags a sign clash with a previously learned edge.
  void merge(const RecoveredEdge& e) {
    auto it = known_.find(ukey(e.u, e.v));
    if (it == known_.end()) {
      store(e);
      return;
    }
    const double tol = m_.options().tol + 1e-6 * std::abs(it->second.raw_gap);
    if (it->second.sign != e.sign && std::abs(it->second.raw_gap) > tol && std::abs(e.raw_gap) > tol)
      warn(fmt::format("sign disagreement on edge ({},{})", it->first.u, it->first.v));
  }

  bool try_star(Vertex x) {
    const auto& legs = adj_[x];
    Vertex ref = -1;
    int ref_sign = gsign_;
    double best = -1.0;
    for (Vertex y : legs)
      if (is_known(x, y)) {
        const auto& e = known_.at(ukey(x, y));
        if (std::abs(e.raw_gap) > best) {
          best = std::abs(e.raw_gap);
          ref = y;
          ref_sign = e.sign;
        }
      }
    try {
      auto s = detail::solve_star(m_, x, legs, alpha_, ref, ref_sign);
      if (ref < 0) {
        auto top = std::max_element(s.gap.begin(), s.gap.end(),
                                    [](double a, double b) { return std::abs(a) < std::abs(b); });
        out_.anchor = ukey(x, s.legs[top - s.gap.begin()]);
      }
      for (std::size_t i = 0; i < s.legs.size(); ++i)
        merge(detail::make_edge(x, s.legs[i], m_.x_edge(x, s.legs[i]), s.gap[i], alpha_, EdgeMethod::star));
      return true;
    } catch (const Error& e) {
      last_error_ = e.what();
      return false;
    }
  }

  bool try_line(const LineContext& ctx) {
    const std::array<VertexPair, 3> edges{ukey(ctx.u, ctx.a), ukey(ctx.u, ctx.b), ukey(ctx.b, ctx.c)};
    int ref = -1;
    int ref_sign = gsign_;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
      auto it = known_.find(edges[i]);
      if (it != known_.end() && std::abs(it->second.raw_gap) > best) {
        best = std::abs(it->second.raw_gap);
        ref = i;
        ref_sign = it->second.sign;
      }
    }
    try {
      auto d = detail::solve_line(m_, ctx, alpha_, general_, ref < 0 ? 1 : ref, ref_sign);
      if (ref < 0) out_.anchor = edges[1];
      const std::array<std::pair<Vertex, Vertex>, 3> ends{{{ctx.u, ctx.a}, {ctx.u, ctx.b}, {ctx.b, ctx.c}}};
      for (int i = 0; i < 3; ++i)
        merge(detail::make_edge(ends[i].first, ends[i].second,
                                m_.x_edge(ends[i].first, ends[i].second), d[i], alpha_, EdgeMethod::line));
      return true;
    } catch (const Error& e) {
      last_error_ = e.what();
      return false;
    }
  }

  std::optional<LineContext> try_contexts(const std::vector<LineContext>& ctxs) {
    for (const auto& c : ctxs)
      if (try_line(c)) return c;
    return std::nullopt;
  }

  // Line contexts rooted at x: first those through b = via (so the known edge
  // (x, via) is reused), then every other valid orientation.
  std::vector<LineContext> contexts_for(Vertex x, Vertex a_pref, Vertex via) const {
    std::vector<LineContext> out;
    auto add = [&](Vertex a, Vertex b) {
      for (Vertex c : adj_[b])
        if (c != x && c != a && !full_edge(x, c)) out.push_back({a, x, b, c});
    };
    add(a_pref, via);
    add(via, a_pref);
    for (Vertex a : adj_[x])
      for (Vertex b : adj_[x])
        if (a != b && !(a == a_pref && b == via) && !(a == via && b == a_pref)) add(a, b);
    return out;
  }

  std::pair<Vertex, Vertex> fallback_seed(const std::vector<Vertex>& comp) {
    for (Vertex x : comp)
      if (deg(x) >= 3 && try_star(x)) return {x, adj_[x].front()};
    for (Vertex x : comp)
      for (Vertex a : adj_[x])
        for (Vertex b : adj_[x]) {
          if (a == b) continue;
          for (Vertex c : adj_[b])
            if (c != x && c != a && !full_edge(x, c) && try_line({a, x, b, c})) return {x, b};
        }
    throw Error(fmt::format("no primitive applies in the component of vertex {}: {}", comp.front(),
                            last_error_.empty() ? "too few separated edges" : last_error_));
  }

  bool vertex_done(Vertex x) const {
    for (Vertex y : adj_[x])
      if (!is_known(x, y)) return false;
    return true;
  }

  void update_s() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (Vertex x = 0; x < n_; ++x)
        if (!in_s_[x] && vertex_done(x) && (deg(x) == 0 || touches_known(x))) {
          in_s_[x] = 1;
          out_.learned_order.push_back(x);
          changed = true;
        }
    }
    if (m_.options().check_invariants)
      for (Vertex x = 0; x < n_; ++x)
        if (in_s_[x] && !vertex_done(x))
          throw std::logic_error(fmt::format("learned vertex {} has an unresolved edge", x));
  }

  bool touches_known(Vertex x) const {
    for (Vertex y : adj_[x])
      if (is_known(x, y)) return true;
    return false;
  }

  void frontier_loop() {
    while (true) {
      bool progress = false;
      for (Vertex x = 0; x < n_ && !progress; ++x) {
        if (in_s_[x]) continue;
        Vertex via = -1;
        for (Vertex y : adj_[x])
          if (in_s_[y]) {
            via = y;
            break;
          }
        if (via < 0) continue;
        if (deg(x) >= 3) {
          progress = try_star(x);
        }
        if (!progress && deg(x) >= 2) {
          Vertex t = deg(x) == 2 ? other(x, via) : adj_[x].front() == via ? adj_[x].back() : adj_[x].front();
          for (const auto& ctx : contexts_for(x, t, via)) {
            if (is_known(ctx.u, ctx.a) && is_known(ctx.u, ctx.b) && is_known(ctx.b, ctx.c)) continue;
            if (try_line(ctx)) {
              progress = true;
              break;
            }
          }
        }
        if (progress) update_s();
      }
      if (!progress) return;
    }
  }

  std::vector<Vertex> unseeded_component(const std::vector<char>& seeded) const {
    std::vector<char> seen(n_, 0);
    for (Vertex s = 0; s < n_; ++s) {
      if (seen[s] || deg(s) == 0) continue;
      std::vector<Vertex> comp;
      std::queue<Vertex> q;
      q.push(s);
      seen[s] = 1;
      bool has_known = false, unresolved = false, tried = false;
      while (!q.empty()) {
        Vertex x = q.front();
        q.pop();
        comp.push_back(x);
        tried = tried || seeded[x];
        for (Vertex y : adj_[x]) {
          if (is_known(x, y)) has_known = true;
          else unresolved = true;
          if (!seen[y]) {
            seen[y] = 1;
            q.push(y);
          }
        }
      }
      if (!has_known && unresolved && !tried) {
        std::sort(comp.begin(), comp.end());
        return comp;
      }
    }
    return {};
  }

  void finish() {
    for (Vertex x = 0; x < n_; ++x)
      for (Vertex y : adj_[x])
        if (x < y && !is_known(x, y)) {
          auto e = detail::make_edge(x, y, m_.x_edge(x, y), 0.0, alpha_, EdgeMethod::nondistinct_failed);
          store(e);
          warn(fmt::format("edge ({},{}) could not be resolved{}", x, y,
                           last_error_.empty() ? "" : ": " + last_error_));
        }
    out_.edges = known_;
  }

  RecoveredMixture triangle(const EdgeSet& full) {
    try {
      auto gaps = triangle_gaps(m_, alpha_, gsign_);
      auto top = std::max_element(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) {
        return std::abs(a.second) < std::abs(b.second);
      });
      out_.anchor = top->first;
      for (const auto& [k, d] : gaps) store(detail::make_edge(k.u, k.v, m_.x_edge(k.u, k.v), d, alpha_, EdgeMethod::triangle));
      out_.learned_order = {0, 1, 2};
    } catch (const Error& e) {
      warn(e.what());
      for (auto k : full) {
        if (auto w = detect_nondistinct(m_.table(), full, k.u, k.v, m_.options())) {
          store(detail::make_edge(k.u, k.v, *w, 0.0, alpha_, EdgeMethod::nondistinct));
        } else {
          store(detail::make_edge(k.u, k.v, m_.x_edge(k.u, k.v), 0.0, alpha_, EdgeMethod::nondistinct_failed));
          warn(fmt::format("edge ({},{}) could not be resolved: the separated part of the triangle has two edges",
                           k.u, k.v));
        }
      }
    }
    out_.edges = known_;
    return out_;
  }

  MomentView m_;
  double alpha_;
  bool general_;
  int gsign_;
  int n_;
  EdgeSet full_;
  std::vector<std::vector<Vertex>> fadj_, adj_;
  std::map<VertexPair, RecoveredEdge> known_;
  std::vector<char> in_s_;
  RecoveredMixture out_;
  std::string last_error_;
};

double range_penalty(const RecoveredMixture& r) {
  double pen = 0.0;
  for (const auto& [k, e] : r.edges) {
    const double p = e.center + (1.0 - r.alpha_used) * e.raw_gap;
    const double q = e.center - r.alpha_used * e.raw_gap;
    for (double w : {p, q}) pen += std::max({0.0, -w, w - 1.0});
  }
  return pen;
}

}  // namespace

TwoNodes learn_two_nodes(const MomentTable& table, const EdgeSet& edges, const RecoveryOptions& opts) {
  require_condition1(table.n_vertices, edges);
  Engine engine(table, opts, 0.5, false, 1);
  engine.set_edges(edges, edges);
  std::vector<Vertex> all(table.n_vertices);
  for (Vertex v = 0; v < table.n_vertices; ++v) all[v] = v;
  auto [u, v] = engine.seed(all);
  TwoNodes out{u, v, {}};
  for (const auto& [k, e] : engine.known()) out.edges.push_back(e);
  return out;
}

RecoveredMixture recover_triangle(const MomentTable& table, const RecoveryOptions& opts) {
  MomentView m(table, opts);
  const auto edges = learn_edges(table, default_edge_threshold(table, opts));
  if (table.n_vertices != 3 || edges.size() != 3)
    throw Error("triangle recovery needs the complete graph on three vertices");
  auto gaps = triangle_gaps(m, 0.5, 1);
  RecoveredMixture out;
  out.n_vertices = 3;
  out.learned_order = {0, 1, 2};
  double best = -1.0;
  for (const auto& [k, d] : gaps) {
    auto e = detail::make_edge(k.u, k.v, m.x_edge(k.u, k.v), d, 0.5, EdgeMethod::triangle);
    out.edges[k] = e;
    if (std::abs(d) > best) {
      best = std::abs(d);
      out.anchor = k;
    }
  }
  return out;
}

RecoveredMixture recover_balanced(const MomentTable& table, const RecoveryOptions& opts) {
  return Engine(table, opts, 0.5, false, 1).run();
}

RecoveredMixture recover_general(const MomentTable& table, double alpha, const RecoveryOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (alpha == 0.5) return Engine(table, opts, alpha, true, 1).run();

  std::vector<RecoveredMixture> runs;
  std::vector<double> score;
  std::string failure;
  for (int s : {1, -1}) {
    try {
      auto r = Engine(table, opts, alpha, true, s).run();
      score.push_back(moment_residual(table, r.to_model()) + range_penalty(r));
      runs.push_back(std::move(r));
    } catch (const Error& e) {
      failure = e.what();
    }
  }
  if (runs.empty()) throw Error(failure);
  std::size_t pick = 0;
  if (runs.size() == 2) {
    pick = score[1] < score[0] ? 1 : 0;
    const double gap = std::abs(score[0] - score[1]);
    const double floor = table.exact() ? 1e3 * opts.tol : 0.0;
    if (gap <= floor || gap <= 1e-3 * std::max(score[0], score[1]))
      runs[pick].warnings.push_back(
          fmt::format("global labeling is weakly identified at alpha = {} (residuals {:.3g} vs {:.3g})",
                      alpha, score[pick], score[1 - pick]));
  }
  return std::move(runs[pick]);
}

RecoveredMixture recover(const MomentTable& table, const RecoverRequest& request,
                         const RecoveryOptions& opts) {
  switch (request.mode) {
    case RecoveryMode::directed:
      return recover_directed(table, opts);
    case RecoveryMode::balanced:
      if (!request.alpha && !request.estimate_alpha) return recover_balanced(table, opts);
      [[fallthrough]];
    case RecoveryMode::general_alpha: {
      double alpha = 0.5;
      if (request.alpha) {
        alpha = *request.alpha;
      } else if (request.estimate_alpha) {
        alpha = estimate_alpha(table, opts);
      } else {
        throw Error("general_alpha mode needs --alpha or --estimate-alpha");
      }
      return recover_general(table, alpha, opts);
    }
  }
  throw Error("unknown recovery mode");
}

}  // namespace cascademix
