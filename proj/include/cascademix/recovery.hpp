#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cascademix/model.hpp"
#include "cascademix/moments.hpp"

namespace cascademix {

struct RecoveryOptions {
  /// Floor for every degeneracy test; the whole tolerance for exact tables.
  double tol = 1e-9;
  /// Empirical tables widen each test to `sigmas` standard errors.
  double sigmas = 3.0;
  /// learn_edges threshold. Default: tol for exact tables, 0.05 otherwise.
  std::optional<double> edge_threshold;
  /// Assert that every learned vertex has all incident edges resolved.
  bool check_invariants = true;
};

enum class EdgeMethod { star, line, triangle, nondistinct, nondistinct_failed };

std::string to_string(EdgeMethod m);

struct RecoveredEdge {
  Vertex u = 0;
  Vertex v = 0;
  double p_hat = 0.0;
  double q_hat = 0.0;
  /// sign of p - q
  int sign = 1;
  EdgeMethod method = EdgeMethod::star;
  /// p - q before clamping.
  double raw_gap = 0.0;
  double center = 0.0;
};

struct RecoveredMixture {
  int n_vertices = 0;
  bool directed = false;
  double alpha_used = 0.5;
  std::optional<VertexPair> anchor;
  /// Order in which vertices joined the learned set.
  std::vector<Vertex> learned_order;
  std::map<VertexPair, RecoveredEdge> edges;
  std::vector<std::string> warnings;
  int path_checks = 0;
  int triangle_checks = 0;

  bool complete() const;
  MixtureModel to_model() const;
};

/// Identifies which edge fixes the sign of a primitive, and to what.
struct SignAnchor {
  Vertex u = 0;
  Vertex v = 0;
  int sign = 1;
};

/// Vertices a-u-b-c with (u,a), (u,b), (b,c) edges and (u,c) not an edge.
struct LineContext {
  Vertex a = 0;
  Vertex u = 0;
  Vertex b = 0;
  Vertex c = 0;
};

EdgeSet learn_edges(const MomentTable& table, double threshold);
double default_edge_threshold(const MomentTable& table, const RecoveryOptions& opts = {});

std::vector<RecoveredEdge> learn_star(const MomentTable& table, Vertex u,
                                      const std::vector<Vertex>& neighbors,
                                      std::optional<SignAnchor> anchor = std::nullopt,
                                      const RecoveryOptions& opts = {});
std::vector<RecoveredEdge> learn_star_general(const MomentTable& table, Vertex u,
                                              const std::vector<Vertex>& neighbors, double alpha,
                                              std::optional<SignAnchor> anchor = std::nullopt,
                                              const RecoveryOptions& opts = {});

std::vector<RecoveredEdge> learn_line(const MomentTable& table, const LineContext& ctx,
                                      std::optional<SignAnchor> anchor = std::nullopt,
                                      const RecoveryOptions& opts = {});
std::vector<RecoveredEdge> learn_line_general(const MomentTable& table, const LineContext& ctx,
                                              double alpha,
                                              std::optional<SignAnchor> anchor = std::nullopt,
                                              const RecoveryOptions& opts = {});

/// p = q = X_ij if every second moment pairing (i,j) with a co-neighbour
/// vanishes; nullopt otherwise.
std::optional<double> detect_nondistinct(const MomentTable& table, const EdgeSet& edges, Vertex i,
                                         Vertex j, const RecoveryOptions& opts = {});

struct TwoNodes {
  Vertex u = 0;
  Vertex v = 0;
  std::vector<RecoveredEdge> edges;
};

TwoNodes learn_two_nodes(const MomentTable& table, const EdgeSet& edges,
                         const RecoveryOptions& opts = {});

RecoveredMixture recover_triangle(const MomentTable& table, const RecoveryOptions& opts = {});
RecoveredMixture recover_balanced(const MomentTable& table, const RecoveryOptions& opts = {});
/// Known alpha. The two global labelings are both solved and the one that
/// reproduces the table best is kept.
RecoveredMixture recover_general(const MomentTable& table, double alpha,
                                 const RecoveryOptions& opts = {});

/// Root of the third-moment equation at star vertex u, reported as min(a, 1 - a).
double estimate_alpha(const MomentTable& table, Vertex u, const RecoveryOptions& opts = {});
/// Uses the first vertex with at least three neighbours and a usable Z_star.
double estimate_alpha(const MomentTable& table, const RecoveryOptions& opts = {});

/// Weights of a -> u, a -> b (zero when absent) and u -> b under one labeling.
struct PathWeights {
  WeightPair first;
  WeightPair chord;
  WeightPair second;
};

/// Pr[a -> u -> b | a source] under the given labeling, and with u's
/// labels exchanged.
double path_moment(const PathWeights& w, double alpha, bool swapped);

/// True when the observed path moment is closer to the aligned labeling.
/// Throws Error("pairing ambiguous ...") when the two predictions are
/// within tolerance of each other.
bool check_path(const MomentTable& table, Vertex a, Vertex u, Vertex b, const PathWeights& w,
                const RecoveryOptions& opts = {});
bool check_triangle(const MomentTable& table, Vertex a, Vertex u, Vertex b, const PathWeights& w,
                    const RecoveryOptions& opts = {});

RecoveredMixture recover_directed(const MomentTable& table, const RecoveryOptions& opts = {});

struct RecoverRequest {
  RecoveryMode mode = RecoveryMode::balanced;
  std::optional<double> alpha;
  bool estimate_alpha = false;
};

RecoveredMixture recover(const MomentTable& table, const RecoverRequest& request,
                         const RecoveryOptions& opts = {});

/// Closed-form value of a query under a model (valid for any graph).
double predicted_moment(const MixtureModel& model, const EventQuery& q);
/// max |predicted - table| over every present entry.
double moment_residual(const MomentTable& table, const MixtureModel& model);

nlohmann::json recovered_to_json(const RecoveredMixture& r);

}  // namespace cascademix
