#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascademix {

using Vertex = std::int32_t;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VertexPair {
  Vertex u = 0;
  Vertex v = 0;

  auto operator<=>(const VertexPair&) const = default;
};

/// Key under which an edge is stored: sorted for undirected models.
inline VertexPair edge_key(Vertex u, Vertex v, bool directed) {
  if (!directed && v < u) return {v, u};
  return {u, v};
}

/// Infection probabilities of one edge in component 1 (p) and component 2 (q).
struct WeightPair {
  double p = 0.0;
  double q = 0.0;

  bool is_edge() const { return p > 0.0 || q > 0.0; }
  bool operator==(const WeightPair&) const = default;
};

/// The hidden ground truth: two weighted graphs on the same vertex set plus
/// the prior alpha = Pr[cascade runs on component 1].
class MixtureModel {
 public:
  MixtureModel(int n_vertices, double alpha, bool directed = false);

  int n_vertices() const { return n_; }
  double alpha() const { return alpha_; }
  bool directed() const { return directed_; }

  /// Sets (or, for p = q = 0, removes) the weights of edge u-v.
  void set_edge(Vertex u, Vertex v, WeightPair w);
  WeightPair weight(Vertex u, Vertex v) const;
  bool has_edge(Vertex u, Vertex v) const;

  const std::map<VertexPair, WeightPair>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  /// Out-neighbours (all neighbours when undirected), sorted ascending.
  std::vector<std::vector<Vertex>> adjacency() const;

  bool operator==(const MixtureModel&) const = default;

 private:
  void check_vertex(Vertex v) const;

  int n_;
  double alpha_;
  bool directed_;
  std::map<VertexPair, WeightPair> edges_;
};

struct SeparationStats {
  /// min |p - q| over edges present in both components; +inf if there are none.
  double delta = std::numeric_limits<double>::infinity();
  /// min strictly positive weight.
  double p_min = std::numeric_limits<double>::infinity();
};

SeparationStats separation_stats(const MixtureModel& model);

struct ConditionReport {
  bool connected = false;
  std::size_t edge_count = 0;
  double delta = std::numeric_limits<double>::infinity();
  double p_min = std::numeric_limits<double>::infinity();
  bool condition1_ok = false;
  bool condition2_ok = false;
  /// Edges with p = q, or one representative vertex per extra component.
  std::vector<VertexPair> offending_items;
};

ConditionReport validate_conditions(const MixtureModel& model);

enum class TopologyKind { line, star, cycle, tree, erdos_renyi };

struct Topology {
  TopologyKind kind = TopologyKind::line;
  double p_edge = 0.0;  // erdos_renyi only
};

std::string to_string(TopologyKind kind);
TopologyKind parse_topology(const std::string& name);

struct WeightRange {
  double lo = 0.2;
  double hi = 0.8;
};

/// Random undirected instance satisfying both recoverability conditions with
/// separation >= min_delta. Deterministic for a given seed.
MixtureModel random_mixture(int n, Topology topology, WeightRange weights, double min_delta,
                            double alpha, std::uint64_t seed);

/// Random directed instance where every vertex has exactly `out_degree`
/// out-neighbours.
MixtureModel random_directed_mixture(int n, int out_degree, WeightRange weights, double min_delta,
                                     double alpha, std::uint64_t seed);

/// Max over all vertex pairs of |p_hat - p| and |q_hat - q|.
double max_weight_error(const MixtureModel& truth, const MixtureModel& estimate);

/// As max_weight_error, but also tries the estimate with p and q exchanged
/// on every edge and returns the smaller of the two.
double max_weight_error_up_to_swap(const MixtureModel& truth, const MixtureModel& estimate);

}  // namespace cascademix
