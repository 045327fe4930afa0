#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

#include <fmt/core.h>

#include "recovery_internal.hpp"

namespace cascademix {

namespace detail {

namespace {

// Indicator events of one u-sourced cascade, as bit sets over
// {u->a, u->b, b->c}. Conjunctions of these are the only moments we need
// covariances for.
constexpr unsigned kA = 1, kB = 2, kBC = 4;

struct Term {
  double grad;
  unsigned mask;
};

// n * Var(sum grad_i I_i) for indicators of the same cascade, where
// prob(mask) returns Pr[all events in mask].
template <class Prob>
double indicator_variance(std::initializer_list<Term> terms, Prob prob) {
  double v = 0.0;
  for (const Term& s : terms)
    for (const Term& t : terms) v += s.grad * t.grad * (prob(s.mask | t.mask) - prob(s.mask) * prob(t.mask));
  return std::max(v, 0.0);
}

}  // namespace

double MomentView::count(Vertex source) const {
  if (source < 0 || source >= static_cast<Vertex>(t_.source_counts.size())) return 0.0;
  return static_cast<double>(t_.source_counts[source]);
}

double MomentView::widen(double sigma) const { return std::max(o_.tol, o_.sigmas * sigma); }

double MomentView::tol_entry(const EventQuery& q) const {
  return exact() ? o_.tol : widen(t_.sigma(q));
}

double MomentView::x_edge(Vertex u, Vertex v) const {
  auto fwd = EventQuery::x(u, v);
  auto back = EventQuery::x(v, u);
  if (!t_.directed && t_.has(fwd) && t_.has(back)) return 0.5 * (t_.value(fwd) + t_.value(back));
  return t_.value(fwd);
}

double MomentView::c_star(Vertex u, Vertex a, Vertex b) const {
  return y(u, a, b) - x(u, a) * x(u, b);
}

double MomentView::tol_c_star(Vertex u, Vertex a, Vertex b) const {
  if (exact()) return o_.tol;
  const double n = count(u);
  if (n <= 0.0) return std::numeric_limits<double>::infinity();
  const double xa = x(u, a), xb = x(u, b), yab = y(u, a, b);
  auto prob = [&](unsigned m) {
    if (m == kA) return xa;
    if (m == kB) return xb;
    return yab;
  };
  const double var = indicator_variance({{1.0, kA | kB}, {-xb, kA}, {-xa, kB}}, prob);
  return widen(std::sqrt(var / n));
}

MomentView::LineMoments MomentView::line(const LineContext& ctx) const {
  LineMoments L{};
  L.xa = x(ctx.u, ctx.a);
  L.xb = x(ctx.u, ctx.b);
  L.xc = x(ctx.b, ctx.c);
  L.y1 = y(ctx.u, ctx.a, ctx.b);
  L.y2 = t_.value(EventQuery::y_line(ctx.u, ctx.b, ctx.c));
  L.z = t_.value(EventQuery::z_line(ctx.u, ctx.a, ctx.b, ctx.c));
  L.A = L.y1 - L.xa * L.xb;
  L.B = L.y2 - L.xb * L.xc;
  L.D3 = L.z + L.xa * L.xb * L.xc - L.xa * L.y2 - L.xc * L.y1;
  if (exact()) {
    L.tol_A = L.tol_B = L.tol_D3 = o_.tol;
    return L;
  }
  const double nu = count(ctx.u);
  const double nb = count(ctx.b);
  if (nu <= 0.0 || nb <= 0.0) {
    L.tol_A = L.tol_B = L.tol_D3 = std::numeric_limits<double>::infinity();
    return L;
  }
  auto prob = [&](unsigned m) {
    switch (m) {
      case kA: return L.xa;
      case kB: return L.xb;
      case kA | kB: return L.y1;
      case kB | kBC: return L.y2;
      default: return L.z;
    }
  };
  const double xc_var = L.xc * (1.0 - L.xc) / nb;
  const double var_A = indicator_variance({{1.0, kA | kB}, {-L.xb, kA}, {-L.xa, kB}}, prob) / nu;
  const double var_B = indicator_variance({{1.0, kB | kBC}, {-L.xc, kB}}, prob) / nu +
                       L.xb * L.xb * xc_var;
  const double var_D3 = indicator_variance({{1.0, kA | kB | kBC},
                                            {L.xb * L.xc - L.y2, kA},
                                            {L.xa * L.xc, kB},
                                            {-L.xc, kA | kB},
                                            {-L.xa, kB | kBC}},
                                           prob) / nu +
                        std::pow(L.xa * L.xb - L.y1, 2) * xc_var;
  L.tol_A = widen(std::sqrt(var_A));
  L.tol_B = widen(std::sqrt(var_B));
  L.tol_D3 = widen(std::sqrt(var_D3));
  return L;
}

RecoveredEdge make_edge(Vertex u, Vertex v, double x, double d, double alpha, EdgeMethod method) {
  RecoveredEdge e;
  e.u = u;
  e.v = v;
  e.center = x;
  e.raw_gap = d;
  e.sign = sgn(d);
  e.method = method;
  e.p_hat = std::clamp(x + (1.0 - alpha) * d, 0.0, 1.0);
  e.q_hat = std::clamp(x - alpha * d, 0.0, 1.0);
  return e;
}

std::vector<std::vector<Vertex>> adjacency_of(int n, const EdgeSet& edges, bool directed) {
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

StarSolve solve_star(const MomentView& m, Vertex u, const std::vector<Vertex>& legs, double alpha,
                     Vertex ref, int ref_sign) {
  const std::size_t k = legs.size();
  if (k < 3) throw Error(fmt::format("star at {} needs at least three neighbours", u));
  const double ab = alpha * (1.0 - alpha);

  std::vector<std::vector<double>> C(k, std::vector<double>(k, 0.0));
  std::vector<std::vector<double>> T(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      C[i][j] = C[j][i] = m.c_star(u, legs[i], legs[j]);
      T[i][j] = T[j][i] = m.tol_c_star(u, legs[i], legs[j]);
    }

  std::vector<double> mag(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t hb = k, hc = k;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = j + 1; l < k; ++l) {
        if (j == i || l == i) continue;
        if (hb == k || std::abs(C[j][l]) > std::abs(C[hb][hc])) {
          hb = j;
          hc = l;
        }
      }
    if (std::abs(C[hb][hc]) <= T[hb][hc])
      throw Error(fmt::format("degenerate separation at ({},{},{})", u, legs[hb], legs[hc]));
    double r = C[i][hb] * C[i][hc] / C[hb][hc];
    const double tr = (std::abs(C[i][hc]) * T[i][hb] + std::abs(C[i][hb]) * T[i][hc] +
                       std::abs(r) * T[hb][hc]) / std::abs(C[hb][hc]);
    if (r < -tr)
      throw Error(fmt::format("degenerate separation at ({},{}): negative radicand", u, legs[i]));
    mag[i] = std::sqrt(std::max(r, 0.0) / ab);
  }

  std::size_t start = k;
  for (std::size_t i = 0; i < k; ++i)
    if (legs[i] == ref) start = i;
  if (start == k) start = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());

  std::vector<int> sign(k, 0);
  sign[start] = ref_sign;
  for (std::size_t step = 1; step < k; ++step) {
    std::size_t bi = k, bj = k;
    double best = -1.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!sign[i]) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (sign[j]) continue;
        double score = std::abs(C[i][j]) / T[i][j];
        if (score > best) {
          best = score;
          bi = i;
          bj = j;
        }
      }
    }
    sign[bj] = sign[bi] * sgn(C[bi][bj]);
  }

  StarSolve out;
  out.legs = legs;
  for (std::size_t i = 0; i < k; ++i) out.gap.push_back(sign[i] * mag[i]);
  return out;
}

std::array<double, 3> solve_line(const MomentView& m, const LineContext& ctx, double alpha,
                                 bool general, int ref, int ref_sign) {
  const auto L = m.line(ctx);
  if (L.xb <= m.tol_entry(EventQuery::x(ctx.u, ctx.b)))
    throw Error(fmt::format("vanishing middle edge ({},{})", ctx.u, ctx.b));
  auto degenerate = [&](const char* what) {
    return Error(fmt::format("degenerate separation in line {}-{}-{}-{} ({})", ctx.a, ctx.u, ctx.b,
                             ctx.c, what));
  };
  if (std::abs(L.A) <= L.tol_A) throw degenerate("first pair");
  if (std::abs(L.B) <= L.tol_B) throw degenerate("second pair");
  if (std::abs(L.D3) <= L.tol_D3) throw degenerate("outer pair");

  if (!general) {
    const double R = L.D3 / L.xb;
    if (sgn(L.A) * sgn(L.B) * sgn(R) < 0) throw degenerate("inconsistent signs");
    std::array<double, 3> mag{2.0 * std::sqrt(L.A * R / L.B), 2.0 * std::sqrt(L.A * L.B / R),
                              2.0 * std::sqrt(L.B * R / L.A)};
    std::array<int, 3> s{};
    s[ref] = ref_sign;
    if (ref == 0) {
      s[1] = s[0] * sgn(L.A);
      s[2] = s[0] * sgn(R);
    } else if (ref == 1) {
      s[0] = s[1] * sgn(L.A);
      s[2] = s[1] * sgn(L.B);
    } else {
      s[1] = s[2] * sgn(L.B);
      s[0] = s[2] * sgn(R);
    }
    return {s[0] * mag[0], s[1] * mag[1], s[2] * mag[2]};
  }

  const double ab = alpha * (1.0 - alpha);
  const double k = 1.0 - 2.0 * alpha;
  const double C = L.A * L.B / L.D3;
  if (!(C > 0.0)) throw degenerate("non-positive middle ratio");
  int sb = ref_sign;
  if (ref == 0) sb = ref_sign * sgn(L.A);
  if (ref == 2) sb = ref_sign * sgn(L.B);
  const double disc = C * C * k * k + 4.0 * ab * C * L.xb;
  const double db = (C * k + sb * std::sqrt(disc)) / (2.0 * ab);
  return {L.A / (ab * db), db, L.B / (ab * db)};
}

}  // namespace detail

using detail::MomentView;

std::string to_string(EdgeMethod m) {
  switch (m) {
    case EdgeMethod::star: return "star";
    case EdgeMethod::line: return "line";
    case EdgeMethod::triangle: return "triangle";
    case EdgeMethod::nondistinct: return "nondistinct";
    case EdgeMethod::nondistinct_failed: return "nondistinct_failed";
  }
  return "?";
}

double default_edge_threshold(const MomentTable& table, const RecoveryOptions& opts) {
  if (opts.edge_threshold) return *opts.edge_threshold;
  return table.exact() ? opts.tol : 0.05;
}

EdgeSet learn_edges(const MomentTable& table, double threshold) {
  EdgeSet edges;
  std::vector<std::string> missing;
  const int n = table.n_vertices;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = 0; v < n; ++v) {
      if (u == v || (!table.directed && v < u)) continue;
      auto fwd = EventQuery::x(u, v);
      auto back = EventQuery::x(v, u);
      if (!table.has(fwd)) missing.push_back(fmt::format("({},{})", u, v));
      if (!table.directed && !table.has(back)) missing.push_back(fmt::format("({},{})", v, u));
      if (!table.has(fwd) || (!table.directed && !table.has(back))) continue;
      double x = table.directed ? table.value(fwd) : 0.5 * (table.value(fwd) + table.value(back));
      if (x >= threshold) edges.insert({u, v});
    }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? " " : "") + missing[i];
    if (missing.size() > 20) list += fmt::format(" ... ({} total)", missing.size());
    throw Error(fmt::format("missing X moments for pairs {}", list));
  }
  return edges;
}

namespace {

Vertex anchor_leg(Vertex u, std::optional<SignAnchor> anchor) {
  if (!anchor) return -1;
  if (anchor->u == u) return anchor->v;
  if (anchor->v == u) return anchor->u;
  throw Error(fmt::format("anchor ({},{}) is not incident to star vertex {}", anchor->u, anchor->v, u));
}

std::vector<RecoveredEdge> star_edges(const MomentTable& table, Vertex u,
                                      const std::vector<Vertex>& neighbors, double alpha,
                                      std::optional<SignAnchor> anchor, const RecoveryOptions& opts) {
  MomentView m(table, opts);
  auto s = detail::solve_star(m, u, neighbors, alpha, anchor_leg(u, anchor), anchor ? anchor->sign : 1);
  std::vector<RecoveredEdge> out;
  for (std::size_t i = 0; i < s.legs.size(); ++i)
    out.push_back(detail::make_edge(u, s.legs[i], m.x_edge(u, s.legs[i]), s.gap[i], alpha, EdgeMethod::star));
  return out;
}

int line_ref(const LineContext& ctx, std::optional<SignAnchor> anchor) {
  if (!anchor) return 1;
  auto is = [&](Vertex x, Vertex y) {
    return (anchor->u == x && anchor->v == y) || (anchor->u == y && anchor->v == x);
  };
  if (is(ctx.u, ctx.a)) return 0;
  if (is(ctx.u, ctx.b)) return 1;
  if (is(ctx.b, ctx.c)) return 2;
  throw Error(fmt::format("anchor ({},{}) is not an edge of the line", anchor->u, anchor->v));
}

std::vector<RecoveredEdge> line_edges(const MomentTable& table, const LineContext& ctx, double alpha,
                                      bool general, std::optional<SignAnchor> anchor,
                                      const RecoveryOptions& opts) {
  MomentView m(table, opts);
  auto d = detail::solve_line(m, ctx, alpha, general, line_ref(ctx, anchor), anchor ? anchor->sign : 1);
  return {detail::make_edge(ctx.u, ctx.a, m.x_edge(ctx.u, ctx.a), d[0], alpha, EdgeMethod::line),
          detail::make_edge(ctx.u, ctx.b, m.x_edge(ctx.u, ctx.b), d[1], alpha, EdgeMethod::line),
          detail::make_edge(ctx.b, ctx.c, m.x_edge(ctx.b, ctx.c), d[2], alpha, EdgeMethod::line)};
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
}

}  // namespace

std::vector<RecoveredEdge> learn_star(const MomentTable& table, Vertex u,
                                      const std::vector<Vertex>& neighbors,
                                      std::optional<SignAnchor> anchor, const RecoveryOptions& opts) {
  return star_edges(table, u, neighbors, 0.5, anchor, opts);
}

std::vector<RecoveredEdge> learn_star_general(const MomentTable& table, Vertex u,
                                              const std::vector<Vertex>& neighbors, double alpha,
                                              std::optional<SignAnchor> anchor,
                                              const RecoveryOptions& opts) {
  check_alpha(alpha);
  return star_edges(table, u, neighbors, alpha, anchor, opts);
}

std::vector<RecoveredEdge> learn_line(const MomentTable& table, const LineContext& ctx,
                                      std::optional<SignAnchor> anchor, const RecoveryOptions& opts) {
  return line_edges(table, ctx, 0.5, false, anchor, opts);
}

std::vector<RecoveredEdge> learn_line_general(const MomentTable& table, const LineContext& ctx,
                                              double alpha, std::optional<SignAnchor> anchor,
                                              const RecoveryOptions& opts) {
  check_alpha(alpha);
  return line_edges(table, ctx, alpha, true, anchor, opts);
}

std::optional<double> detect_nondistinct(const MomentTable& table, const EdgeSet& edges, Vertex i,
                                         Vertex j, const RecoveryOptions& opts) {
  MomentView m(table, opts);
  const auto adj = detail::adjacency_of(table.n_vertices, edges, false);
  const double x = m.x_edge(i, j);
  if (x <= m.tol_entry(EventQuery::x(i, j))) return std::nullopt;
  int checks = 0;
  for (auto [root, other] : {std::pair{i, j}, std::pair{j, i}})
    for (Vertex k : adj[root]) {
      if (k == other) continue;
      ++checks;
      if (std::abs(m.c_star(root, k, other)) > m.tol_c_star(root, k, other)) return std::nullopt;
    }
  if (checks == 0) return std::nullopt;
  return x;
}

double path_moment(const PathWeights& w, double alpha, bool swapped) {
  const WeightPair second = swapped ? WeightPair{w.second.q, w.second.p} : w.second;
  return alpha * w.first.p * (1.0 - w.chord.p) * second.p +
         (1.0 - alpha) * w.first.q * (1.0 - w.chord.q) * second.q;
}

namespace {

bool check_pairing(const MomentTable& table, const EventQuery& q, const PathWeights& w,
                   const RecoveryOptions& opts) {
  MomentView m(table, opts);
  const double obs = table.value(q);
  const double aligned = path_moment(w, 0.5, false);
  const double swapped = path_moment(w, 0.5, true);
  if (std::abs(aligned - swapped) <= m.tol_entry(q))
    throw Error(fmt::format("pairing ambiguous at {}", to_string(q)));
  return std::abs(obs - aligned) <= std::abs(obs - swapped);
}

}  // namespace

bool check_path(const MomentTable& table, Vertex a, Vertex u, Vertex b, const PathWeights& w,
                const RecoveryOptions& opts) {
  return check_pairing(table, EventQuery::path(a, u, b), w, opts);
}

bool check_triangle(const MomentTable& table, Vertex a, Vertex u, Vertex b, const PathWeights& w,
                    const RecoveryOptions& opts) {
  return check_pairing(table, EventQuery::triangle_path(a, u, b), w, opts);
}

double estimate_alpha(const MomentTable& table, Vertex u, const RecoveryOptions& opts) {
  MomentView m(table, opts);
  const auto edges = learn_edges(table, default_edge_threshold(table, opts));
  const auto adj = detail::adjacency_of(table.n_vertices, edges, table.directed);
  const auto& nb = adj.at(u);
  if (nb.size() < 3)
    throw Error(fmt::format("alpha estimation needs a star vertex; {} has {} neighbours", u, nb.size()));

  std::array<Vertex, 3> legs{};
  double best = -1.0;
  for (std::size_t i = 0; i < nb.size(); ++i)
    for (std::size_t j = i + 1; j < nb.size(); ++j)
      for (std::size_t k = j + 1; k < nb.size(); ++k) {
        if (!table.has(EventQuery::z_star(u, nb[i], nb[j], nb[k]))) continue;
        double score = std::min({std::abs(m.c_star(u, nb[i], nb[j])) / m.tol_c_star(u, nb[i], nb[j]),
                                 std::abs(m.c_star(u, nb[i], nb[k])) / m.tol_c_star(u, nb[i], nb[k]),
                                 std::abs(m.c_star(u, nb[j], nb[k])) / m.tol_c_star(u, nb[j], nb[k])});
        if (score > best) {
          best = score;
          legs = {nb[i], nb[j], nb[k]};
        }
      }
  if (best < 0.0) throw Error(fmt::format("missing Z_star moments at vertex {}", u));
  if (best <= 1.0) throw Error(fmt::format("alpha unidentifiable at this vertex ({})", u));

  const double cab = m.c_star(u, legs[0], legs[1]);
  const double cac = m.c_star(u, legs[0], legs[2]);
  const double cbc = m.c_star(u, legs[1], legs[2]);
  const std::array<double, 3> radicand{cab * cac / cbc, cab * cbc / cac, cac * cbc / cab};
  const std::array<int, 3> sign{1, detail::sgn(cab), detail::sgn(cac)};
  const std::array<double, 3> x{m.x(u, legs[0]), m.x(u, legs[1]), m.x(u, legs[2])};
  const double z_obs = table.value(EventQuery::z_star(u, legs[0], legs[1], legs[2]));

  auto g = [&](double a) {
    const double ab = a * (1.0 - a);
    double pp = 1.0, qq = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double d = sign[i] * std::sqrt(std::max(radicand[i], 0.0) / ab);
      pp *= x[i] + (1.0 - a) * d;
      qq *= x[i] - a * d;
    }
    return a * pp + (1.0 - a) * qq - z_obs;
  };

  constexpr int kGrid = 4000;
  constexpr double kEdge = 1e-4;
  std::vector<double> roots;
  double prev_a = kEdge;
  double prev_g = g(prev_a);
  for (int i = 1; i <= kGrid; ++i) {
    const double a = kEdge + (1.0 - 2.0 * kEdge) * i / kGrid;
    const double ga = g(a);
    if (prev_g == 0.0) roots.push_back(prev_a);
    if ((prev_g < 0.0 && ga > 0.0) || (prev_g > 0.0 && ga < 0.0)) {
      double lo = prev_a, hi = a, glo = prev_g;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_a = a;
    prev_g = ga;
  }
  std::vector<double> canonical;
  for (double r : roots) {
    const double c = std::min(r, 1.0 - r);
    if (std::none_of(canonical.begin(), canonical.end(), [&](double o) { return std::abs(o - c) < 1e-6; }))
      canonical.push_back(c);
  }
  if (canonical.empty()) throw Error(fmt::format("alpha unidentifiable at this vertex ({})", u));
  if (canonical.size() > 1)
    throw Error(fmt::format("alpha unidentifiable at this vertex ({}): {} candidate roots", u,
                            canonical.size()));
  return canonical.front();
}

double estimate_alpha(const MomentTable& table, const RecoveryOptions& opts) {
  const auto edges = learn_edges(table, default_edge_threshold(table, opts));
  const auto adj = detail::adjacency_of(table.n_vertices, edges, table.directed);
  std::string last = "no vertex with at least three neighbours";
  for (Vertex u = 0; u < table.n_vertices; ++u) {
    if (adj[u].size() < 3) continue;
    try {
      return estimate_alpha(table, u, opts);
    } catch (const Error& e) {
      last = e.what();
    }
  }
  throw Error(fmt::format("alpha unidentifiable: {}", last));
}

}  // namespace cascademix
