#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cascademix/model.hpp"
#include "cascademix/moments.hpp"

namespace cascademix {

/// M value standing for the exact oracle (printed as "inf").
inline constexpr std::uint64_t kExactM = 0;

struct ExperimentSpec {
  /// Model file; when empty the generator fields below are used.
  std::string model_path;
  int n = 4;
  Topology topology{TopologyKind::star, 0.0};
  WeightRange weights;
  double min_delta = 0.2;
  double alpha = 0.5;
  std::uint64_t model_seed = 1;
  int out_degree = 3;

  std::vector<std::uint64_t> m_grid;
  std::vector<std::uint64_t> seeds;
  double epsilon_target = 0.05;
  double delta = 0.1;
  RecoveryMode mode = RecoveryMode::balanced;
  /// Edge threshold; default p_min / 4 of the true model.
  std::optional<double> edge_threshold;
  int workers = 1;
  bool omit_runtime = false;
};

struct ExperimentRow {
  int n = 0;
  double delta_sep = 0.0;
  double p_min = 0.0;
  double alpha = 0.0;
  std::uint64_t m = 0;
  std::uint64_t seed = 0;
  double max_err = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = 0.0;
  double bound = 0.0;
  std::string reason;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;

  bool has_failures() const;
};

enum class ReportFormat { csv, json };

void validate_spec(const ExperimentSpec& spec);
MixtureModel experiment_model(const ExperimentSpec& spec);

/// (41 / (p_min^3 delta^2)) * sqrt((2N / M) ln(12 N^2 / confidence))
double theoretical_bound(int n, double p_min, double delta_sep, std::uint64_t m, double confidence);

/// Rows ordered by (M, seed) whatever the completion order of the cells.
ExperimentReport run_experiment(const ExperimentSpec& spec);

std::string emit_report(const ExperimentReport& report, ReportFormat format);
ReportFormat parse_format(const std::string& name);

/// Applies one `key = value` setting; the same keys are accepted by the
/// spec file and by the CLI.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
/// Flat key = value text, '#' comments, arrays as [a, b, c].
ExperimentSpec parse_spec(const std::string& text);

}  // namespace cascademix
