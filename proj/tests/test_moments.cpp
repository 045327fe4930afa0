#include <cmath>
#include <set>

#include "doctest.h"

#include "cascademix/moments.hpp"
#include "support/brute_force.hpp"

using namespace cascademix;

namespace {

MixtureModel star4() {
  MixtureModel m(4, 0.5);
  m.set_edge(0, 1, {0.8, 0.2});
  m.set_edge(0, 2, {0.7, 0.3});
  m.set_edge(0, 3, {0.6, 0.4});
  return m;
}

Cascade record(Vertex src, std::vector<InfectionEvent> ev = {}) { return Cascade{src, std::move(ev)}; }

CascadeCorpus hand_corpus() {
  CascadeCorpus c;
  c.n_vertices = 3;
  c.cascades = {record(0, {{1, 0, 1}}), record(0), record(1, {{1, 1, 0}}), record(1)};
  return c;
}

std::set<EventQuery> as_set(const std::vector<EventQuery>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("counting estimator") {
  auto corpus = hand_corpus();
  auto r = estimate(corpus, EventQuery::x(0, 1));
  CHECK(r.value == 0.5);
  CHECK(r.num == 1);
  CHECK(r.den == 2);
  CHECK_THROWS_WITH_AS(estimate(corpus, EventQuery::x(2, 0)), doctest::Contains("no conditioning samples"), Error);
}

TEST_CASE("table agrees with single estimates") {
  auto corpus = hand_corpus();
  auto queries = all_pair_queries(3);
  auto t = build_table(corpus, queries, 3);
  CHECK(t.provenance == Provenance::empirical);
  CHECK(t.sample_count == 4);
  CHECK(t.source_counts == std::vector<std::uint64_t>{2, 2, 0});
  for (const auto& q : queries) {
    if (q.source() == 2) {
      CHECK_FALSE(t.entries.at(q).present());
      CHECK_THROWS_WITH_AS(t.value(q), doctest::Contains("no conditioning samples"), Error);
      continue;
    }
    auto r = estimate(corpus, q);
    CHECK(t.value(q) == r.value);
    CHECK(t.entries.at(q).num == r.num);
    CHECK(t.entries.at(q).den == r.den);
  }
  CHECK_THROWS_WITH_AS(t.value(EventQuery::y_star(0, 1, 2)), doctest::Contains("missing moment"), Error);
}

TEST_CASE("sharded counting matches one shard") {
  auto m = random_mixture(6, {TopologyKind::cycle}, {0.2, 0.8}, 0.2, 0.5, 8);
  auto corpus = run_corpus(m, 20000, 3, 4);
  auto q = recovery_queries(m, RecoveryMode::general_alpha);
  auto a = build_table(corpus, q, 1);
  auto b = build_table(corpus, q, 7);
  REQUIRE(a.entries.size() == b.entries.size());
  for (const auto& [k, e] : a.entries) {
    CHECK(b.entries.at(k).num == e.num);
    CHECK(b.entries.at(k).den == e.den);
  }
  CHECK(table_to_json(a) == table_to_json(b));
}

TEST_CASE("large-sample X estimate on the star") {
  auto corpus = run_corpus(star4(), 1000000, 21, 8);
  auto r = estimate(corpus, EventQuery::x(0, 1));
  CHECK(std::abs(r.value - 0.5) <= 0.003);
}

TEST_CASE("edge and non-edge X estimates separate") {
  auto m = random_mixture(5, {TopologyKind::tree}, {0.2, 0.8}, 0.2, 0.5, 6);
  auto corpus = run_corpus(m, 100000, 4, 8);
  auto t = build_table(corpus, all_pair_queries(5), 4);
  const double p_min = separation_stats(m).p_min;
  for (Vertex u = 0; u < 5; ++u)
    for (Vertex a = 0; a < 5; ++a) {
      if (u == a) continue;
      auto q = EventQuery::x(u, a);
      const double sd = std::max(t.sigma(q), 1.0 / t.entries.at(q).den);
      if (m.has_edge(u, a))
        CHECK(t.value(q) >= p_min / 2 - 3 * sd);
      else
        CHECK(t.value(q) <= 3 * sd);
    }
}

TEST_CASE("exact table flags provenance") {
  auto m = star4();
  auto t = exact_table(m, recovery_queries(m, RecoveryMode::balanced));
  CHECK(t.exact());
  CHECK(t.sample_count == 0);
  for (const auto& [q, e] : t.entries) {
    CHECK(e.num == 0);
    CHECK(e.den == 0);
    CHECK(t.sigma(q) == 0.0);
  }
  auto j = table_to_json(t);
  CHECK(j["provenance"] == "exact");
  CHECK(j["moments"]["X 0 1"]["num"].is_null());
}

TEST_CASE("exact table agrees with brute force") {
  std::vector<MixtureModel> models{star4()};
  for (std::uint64_t s = 1; s <= 4; ++s) {
    models.push_back(random_mixture(5, {TopologyKind::line}, {0.2, 0.8}, 0.2, 0.5, s));
    models.push_back(random_mixture(4, {TopologyKind::cycle}, {0.2, 0.8}, 0.2, 0.3, s));
  }
  for (const auto& m : models) {
    auto t = exact_table(m, recovery_queries(m, RecoveryMode::general_alpha));
    for (const auto& [q, e] : t.entries)
      CHECK(std::abs(e.value - testsupport::brute_force_moment(m, q)) <= 1e-12);
  }
}

TEST_CASE("query lists") {
  SUBCASE("star") {
    auto q = as_set(star_queries(0, {1, 2, 3}));
    std::set<EventQuery> want{EventQuery::x(0, 1),         EventQuery::x(0, 2),         EventQuery::x(0, 3),
                              EventQuery::y_star(0, 1, 2), EventQuery::y_star(0, 1, 3), EventQuery::y_star(0, 2, 3)};
    CHECK(q == want);
  }
  SUBCASE("line rooted at u") {
    auto q = as_set(line_queries(1, 0, 2, 3));
    std::set<EventQuery> want{EventQuery::x(0, 1),         EventQuery::x(0, 2),         EventQuery::x(2, 3),
                              EventQuery::y_star(0, 1, 2), EventQuery::y_line(0, 2, 3), EventQuery::z_line(0, 1, 2, 3)};
    CHECK(q == want);
  }
  SUBCASE("triangle needs only X and Y_star") {
    EdgeSet tri{{0, 1}, {0, 2}, {1, 2}};
    auto q = required_queries(3, tri, RecoveryMode::balanced);
    CHECK(q.size() == 9);
    for (const auto& e : q) CHECK((e.kind == QueryKind::X || e.kind == QueryKind::Y_star));
  }
  SUBCASE("directed paths choose the chord form") {
    EdgeSet d{{0, 1}, {1, 2}, {0, 2}, {2, 3}};
    auto q = as_set(required_queries(4, d, RecoveryMode::directed));
    CHECK(q.count(EventQuery::triangle_path(0, 1, 2)) == 1);
    CHECK(q.count(EventQuery::path(1, 2, 3)) == 1);
    CHECK(q.count(EventQuery::path(0, 2, 3)) == 1);
  }
}

TEST_CASE("table JSON round trip") {
  auto m = random_mixture(5, {TopologyKind::line}, {0.2, 0.8}, 0.2, 0.5, 2);
  auto corpus = run_corpus(m, 5000, 12, 2);
  auto t = build_table(corpus, recovery_queries(m, RecoveryMode::balanced), 2);
  t.seed = corpus.seed;
  auto back = table_from_json(nlohmann::json::parse(table_to_json(t).dump()));
  CHECK(back.n_vertices == 5);
  CHECK(back.sample_count == 5000);
  CHECK(back.seed == 12);
  CHECK(back.source_counts == t.source_counts);
  REQUIRE(back.entries.size() == t.entries.size());
  for (const auto& [q, e] : t.entries) {
    CHECK(back.entries.at(q).num == e.num);
    CHECK(back.entries.at(q).den == e.den);
    CHECK(back.entries.at(q).value == e.value);
  }
  CHECK_THROWS_AS(table_from_json(nlohmann::json::parse(R"({"n":3})")), Error);
}
