#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascademix/model.hpp"
#include "cascademix/rng.hpp"

namespace cascademix {

struct InfectionEvent {
  int time = 0;
  Vertex infector = 0;
  Vertex infectee = 0;

  auto operator<=>(const InfectionEvent&) const = default;
};

/// Observable record of one cascade. Events are sorted by
/// (time, infector, infectee); the component label is not part of it.
struct Cascade {
  Vertex source = 0;
  std::vector<InfectionEvent> events;

  bool has_event(Vertex infector, Vertex infectee) const;

  auto operator<=>(const Cascade&) const = default;
};

/// Cascade together with the hidden component (1 or 2) that generated it.
struct LabeledCascade {
  Cascade cascade;
  int component = 1;
};

LabeledCascade simulate_cascade(const MixtureModel& model, Stream& rng);

inline Cascade run_cascade(const MixtureModel& model, Stream& rng) {
  return simulate_cascade(model, rng).cascade;
}

struct CascadeCorpus {
  int n_vertices = 0;
  std::uint64_t seed = 0;
  std::string model_digest;
  std::vector<Cascade> cascades;
  /// Debug side channel, filled only on request. Never read by estimation.
  std::vector<int> labels;

  std::size_t size() const { return cascades.size(); }
};

/// M i.i.d. cascades; cascade i draws from substream(seed, i), so the result
/// does not depend on `workers`.
CascadeCorpus run_corpus(const MixtureModel& model, std::size_t count, std::uint64_t seed,
                         int workers = 1, bool keep_labels = false);

/// Hex FNV-1a digest of the canonical model serialization.
std::string model_digest(const MixtureModel& model);

void write_corpus(std::ostream& out, const CascadeCorpus& corpus);
CascadeCorpus read_corpus(std::istream& in);
void write_labels(std::ostream& out, const CascadeCorpus& corpus);

}  // namespace cascademix
