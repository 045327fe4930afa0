#pragma once

#include <map>
#include <vector>

#include "json.hpp"

#include "cascademix/cascade.hpp"
#include "cascademix/model.hpp"
#include "cascademix/query.hpp"

namespace cascademix {

/// Maximum number of attempt edges (2|E| undirected, |E| directed).
inline constexpr int kOracleBudget = 22;

/// Exact law of the observable record.
struct OutcomeDistribution {
  int n_vertices = 0;
  std::map<Cascade, double> atoms;

  double total_mass() const;
  /// Mass of records whose source is u (1/N up to rounding).
  double source_mass(Vertex u) const;
};

OutcomeDistribution enumerate_distribution(const MixtureModel& model);

/// Pr[query pattern | source], computed from the enumerated distribution.
double exact_moment(const OutcomeDistribution& dist, const EventQuery& q);
double exact_moment(const MixtureModel& model, const EventQuery& q);

struct DistributionComparison {
  bool equal = false;
  double tv_distance = 0.0;
};

DistributionComparison distributions_equal(const OutcomeDistribution& a,
                                           const OutcomeDistribution& b, double tol = 1e-12);

/// {"n": N, "atoms": [{"src": u, "ev": [[t,i,j],...], "mass": m}, ...]}
nlohmann::json distribution_to_json(const OutcomeDistribution& dist);

}  // namespace cascademix
