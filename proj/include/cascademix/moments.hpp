#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "json.hpp"

#include "cascademix/cascade.hpp"
#include "cascademix/oracle.hpp"
#include "cascademix/query.hpp"

namespace cascademix {

struct MomentEntry {
  /// NaN when the conditioning event was never observed.
  double value = 0.0;
  /// Counts; both zero for exact entries.
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  bool present() const { return value == value; }
};

enum class Provenance { empirical, exact };

class MomentTable {
 public:
  int n_vertices = 0;
  bool directed = false;
  Provenance provenance = Provenance::exact;
  std::uint64_t sample_count = 0;  // M (empirical only)
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> source_counts;
  std::map<EventQuery, MomentEntry> entries;

  bool has(const EventQuery& q) const;
  /// Throws Error("missing moment ...") if absent.
  double value(const EventQuery& q) const;
  /// Binomial standard error of an empirical entry; 0 for exact tables.
  double sigma(const EventQuery& q) const;
  bool exact() const { return provenance == Provenance::exact; }
};

struct CountResult {
  double value = 0.0;
  std::uint64_t num = 0;
  std::uint64_t den = 0;
};

/// Ratio estimator over the corpus. Throws Error("no conditioning samples").
CountResult estimate(const CascadeCorpus& corpus, const EventQuery& q);

/// One pass over the corpus, sharded over `workers` threads.
MomentTable build_table(const CascadeCorpus& corpus, const std::vector<EventQuery>& queries,
                        int workers = 1);

MomentTable exact_table(const OutcomeDistribution& dist, const std::vector<EventQuery>& queries,
                        bool directed);
MomentTable exact_table(const MixtureModel& model, const std::vector<EventQuery>& queries);

enum class RecoveryMode { balanced, general_alpha, directed };

std::string to_string(RecoveryMode mode);
RecoveryMode parse_mode(const std::string& name);

using EdgeSet = std::set<VertexPair>;

/// X for every ordered pair of distinct vertices.
std::vector<EventQuery> all_pair_queries(int n);

std::vector<EventQuery> star_queries(Vertex u, const std::vector<Vertex>& neighbors);
/// Inputs of a line solve on a-u-b-c rooted at u.
std::vector<EventQuery> line_queries(Vertex a, Vertex u, Vertex b, Vertex c);

/// Every moment recovery may ask for on edge set E (without the all-pairs X).
std::vector<EventQuery> required_queries(int n, const EdgeSet& edges, RecoveryMode mode);

/// Full query list for recovery on a known model: all-pairs X plus required_queries.
std::vector<EventQuery> recovery_queries(const MixtureModel& model, RecoveryMode mode);

nlohmann::json table_to_json(const MomentTable& table);
MomentTable table_from_json(const nlohmann::json& doc);

}  // namespace cascademix
