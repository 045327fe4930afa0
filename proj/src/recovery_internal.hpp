#pragma once

#include <array>
#include <vector>

#include "cascademix/recovery.hpp"

namespace cascademix::detail {

/// Moment lookups plus the tolerances used by every degeneracy test.
/// Empirical tolerances are delta-method standard errors scaled by
/// opts.sigmas; exact tables use opts.tol throughout.
class MomentView {
 public:
  MomentView(const MomentTable& table, const RecoveryOptions& opts) : t_(table), o_(opts) {}

  const MomentTable& table() const { return t_; }
  const RecoveryOptions& options() const { return o_; }
  bool exact() const { return t_.exact(); }

  double x(Vertex u, Vertex a) const { return t_.value(EventQuery::x(u, a)); }
  /// Centre estimate for an edge: both directions averaged when undirected.
  double x_edge(Vertex u, Vertex v) const;
  double y(Vertex u, Vertex a, Vertex b) const { return t_.value(EventQuery::y_star(u, a, b)); }

  /// Y_star(u,a,b) - X(u,a) X(u,b)
  double c_star(Vertex u, Vertex a, Vertex b) const;
  double tol_c_star(Vertex u, Vertex a, Vertex b) const;

  struct LineMoments {
    double xa, xb, xc, y1, y2, z;
    /// Y1 - Xa Xb, Y2 - Xb Xc, Z + Xa Xb Xc - Xa Y2 - Xc Y1
    double A, B, D3;
    double tol_A, tol_B, tol_D3;
  };
  LineMoments line(const LineContext& ctx) const;

  double tol_entry(const EventQuery& q) const;
  double widen(double sigma) const;

 private:
  double count(Vertex source) const;

  const MomentTable& t_;
  const RecoveryOptions& o_;
};

inline int sgn(double x) { return x < 0.0 ? -1 : 1; }

/// Builds a RecoveredEdge from centre X and signed gap d = p - q.
RecoveredEdge make_edge(Vertex u, Vertex v, double x, double d, double alpha, EdgeMethod method);

/// Neighbour lists of an edge set (out-neighbours when directed).
std::vector<std::vector<Vertex>> adjacency_of(int n, const EdgeSet& edges, bool directed);

/// Signed gaps of the legs of a star at u. The sign of leg `ref` is `ref_sign`
/// unless ref is -1, in which case the largest leg gets ref_sign.
struct StarSolve {
  std::vector<Vertex> legs;
  std::vector<double> gap;
};
StarSolve solve_star(const MomentView& m, Vertex u, const std::vector<Vertex>& legs, double alpha,
                     Vertex ref, int ref_sign);

/// Signed gaps (d_ua, d_ub, d_bc) of a line solve. `ref` indexes the edge whose
/// sign is `ref_sign` (0: ua, 1: ub, 2: bc).
std::array<double, 3> solve_line(const MomentView& m, const LineContext& ctx, double alpha,
                                 bool general, int ref, int ref_sign);

}  // namespace cascademix::detail
