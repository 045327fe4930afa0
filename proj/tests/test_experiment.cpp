#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "json.hpp"

#include "cascademix/experiment.hpp"

using namespace cascademix;

namespace {

ExperimentSpec star_spec() {
  ExperimentSpec s;
  s.n = 4;
  s.topology = {TopologyKind::star};
  s.weights = {0.2, 0.8};
  s.min_delta = 0.4;
  s.model_seed = 3;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::vector<double> errors_at(const ExperimentReport& r, std::uint64_t m) {
  std::vector<double> out;
  for (const auto& row : r.rows)
    if (row.m == m) out.push_back(row.max_err);
  return out;
}

}  // namespace

TEST_CASE("spec parsing") {
  auto s = parse_spec(R"(
# sweep
n = 6
topology = "tree"
M_grid = [1e4, 4e4, inf]
seed_count = 3
mode = balanced
threshold = 0.05   # override
omit_runtime = true
)");
  CHECK(s.n == 6);
  CHECK(s.topology.kind == TopologyKind::tree);
  CHECK(s.m_grid == std::vector<std::uint64_t>{10000, 40000, kExactM});
  CHECK(s.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(s.edge_threshold == 0.05);
  CHECK(s.omit_runtime);
  CHECK_THROWS_WITH_AS(parse_spec("bogus = 1"), doctest::Contains("unknown experiment setting"), Error);
  CHECK_THROWS_WITH_AS(parse_spec("n = 4\nM_grid = [x]"), doctest::Contains("spec line 2"), Error);
}

TEST_CASE("spec validation") {
  auto s = star_spec();
  s.seeds = {1};
  s.m_grid = {};
  CHECK_THROWS_AS(validate_spec(s), Error);
  s.m_grid = {kExactM, 1000};
  CHECK_THROWS_WITH_AS(validate_spec(s), doctest::Contains("last"), Error);
  s.m_grid = {2000, 1000};
  CHECK_THROWS_WITH_AS(validate_spec(s), doctest::Contains("increasing"), Error);
  s.m_grid = {1000, 2000, kExactM};
  CHECK_NOTHROW(validate_spec(s));
}

TEST_CASE("bound formula") {
  const double b = theoretical_bound(4, 0.2, 0.4, 10000, 0.1);
  CHECK(b == doctest::Approx(41.0 / (0.008 * 0.16) * std::sqrt(8.0 / 10000 * std::log(12.0 * 16 / 0.1))));
  CHECK(theoretical_bound(4, 0.2, 0.4, 40000, 0.1) == doctest::Approx(b / 2));
}

TEST_CASE("exact rows are error free") {
  auto s = star_spec();
  s.n = 6;
  s.topology = {TopologyKind::tree};
  s.m_grid = {kExactM};
  s.seeds = {1, 2};
  auto r = run_experiment(s);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.max_err <= 1e-9);
    CHECK(row.bound == 0.0);
  }
  CHECK_FALSE(r.has_failures());
  CHECK(emit_report(r, ReportFormat::csv).find(",inf,") != std::string::npos);
}

TEST_CASE("too few samples give NaN rows") {
  auto s = star_spec();
  s.n = 10;
  s.topology = {TopologyKind::tree};
  s.min_delta = 0.2;
  s.m_grid = {4};
  s.seeds = {1, 2};
  auto r = run_experiment(s);
  CHECK(r.has_failures());
  for (const auto& row : r.rows) {
    CHECK(std::isnan(row.max_err));
    CHECK(row.reason.find("no conditioning samples") != std::string::npos);
  }
  auto csv = emit_report(r, ReportFormat::csv);
  CHECK(csv.find(",nan,") != std::string::npos);
}

TEST_CASE("error shrinks like the inverse square root of M") {
  auto s = star_spec();
  s.m_grid = {10000, 40000};
  for (std::uint64_t i = 1; i <= 20; ++i) s.seeds.push_back(i);
  s.workers = 8;
  auto r = run_experiment(s);
  CHECK_FALSE(r.has_failures());
  const double ratio = median(errors_at(r, 10000)) / median(errors_at(r, 40000));
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
}

TEST_CASE("rows do not depend on worker count") {
  auto s = star_spec();
  s.m_grid = {2000, 8000};
  s.seeds = {1, 2, 3, 4, 5};
  s.omit_runtime = true;
  s.workers = 1;
  auto a = emit_report(run_experiment(s), ReportFormat::csv);
  s.workers = 8;
  auto b = emit_report(run_experiment(s), ReportFormat::csv);
  CHECK(a == b);
}

TEST_CASE("report formats") {
  ExperimentReport empty;
  CHECK(emit_report(empty, ReportFormat::csv) == "n,delta,p_min,alpha,M,seed,max_err,runtime_ms,bound\n");
  CHECK(nlohmann::json::parse(emit_report(empty, ReportFormat::json)).empty());

  ExperimentReport one;
  ExperimentRow row;
  row.n = 4;
  row.delta_sep = 0.4;
  row.p_min = 0.2;
  row.alpha = 0.5;
  row.m = 10000;
  row.seed = 7;
  row.max_err = 0.0125;
  row.runtime_ms = 3.5;
  row.bound = 12.25;
  one.rows.push_back(row);
  auto csv = emit_report(one, ReportFormat::csv);
  CHECK(csv == "n,delta,p_min,alpha,M,seed,max_err,runtime_ms,bound\n4,0.4,0.2,0.5,10000,7,0.0125,3.5,12.25\n");

  auto j = nlohmann::json::parse(emit_report(one, ReportFormat::json));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["M"] == 10000);
  CHECK(j[0]["max_err"] == 0.0125);
  CHECK_FALSE(j[0].contains("reason"));

  CHECK(parse_format("json") == ReportFormat::json);
  CHECK_THROWS_AS(parse_format("xml"), Error);
}
