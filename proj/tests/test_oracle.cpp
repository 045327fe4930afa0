#include <cmath>

#include "doctest.h"

#include "cascademix/oracle.hpp"
#include "support/brute_force.hpp"

using namespace cascademix;

namespace {

MixtureModel one_edge(double p, double q) {
  MixtureModel m(2, 0.5);
  m.set_edge(0, 1, {p, q});
  return m;
}

MixtureModel star4() {
  MixtureModel m(4, 0.5);
  m.set_edge(0, 1, {0.8, 0.2});
  m.set_edge(0, 2, {0.7, 0.3});
  m.set_edge(0, 3, {0.6, 0.4});
  return m;
}

MixtureModel line4() {
  // a=1 - u=0 - b=2 - c=3
  MixtureModel m(4, 0.5);
  m.set_edge(0, 1, {0.8, 0.2});
  m.set_edge(0, 2, {0.7, 0.3});
  m.set_edge(2, 3, {0.6, 0.4});
  return m;
}

}  // namespace

TEST_CASE("one-edge flip family has four equal atoms") {
  for (double beta : {0.1, 0.3, 0.7, 0.95}) {
    auto d = enumerate_distribution(one_edge(beta, 1 - beta));
    REQUIRE(d.atoms.size() == 4);
    for (const auto& [c, mass] : d.atoms) CHECK(mass == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("zero weights give one atom per source") {
  MixtureModel m(5, 0.5);
  auto d = enumerate_distribution(m);
  CHECK(d.atoms.size() == 5);
  for (const auto& [c, mass] : d.atoms) {
    CHECK(c.events.empty());
    CHECK(mass == doctest::Approx(0.2));
  }
}

TEST_CASE("worked moments") {
  CHECK(exact_moment(star4(), EventQuery::x(0, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(exact_moment(star4(), EventQuery::y_star(0, 1, 2)) == doctest::Approx(0.31).epsilon(1e-14));
  CHECK(exact_moment(line4(), EventQuery::z_line(0, 1, 2, 3)) == doctest::Approx(0.18).epsilon(1e-14));
  CHECK(exact_moment(line4(), EventQuery::y_line(0, 2, 3)) == doctest::Approx(0.27).epsilon(1e-14));
}

TEST_CASE("star moments match closed forms") {
  auto m = star4();
  auto d = enumerate_distribution(m);
  const double a = m.alpha(), b = 1 - a;
  for (Vertex i = 1; i <= 3; ++i) {
    auto wi = m.weight(0, i);
    CHECK(std::abs(exact_moment(d, EventQuery::x(0, i)) - (a * wi.p + b * wi.q)) <= 1e-12);
    for (Vertex j = i + 1; j <= 3; ++j) {
      auto wj = m.weight(0, j);
      CHECK(std::abs(exact_moment(d, EventQuery::y_star(0, i, j)) - (a * wi.p * wj.p + b * wi.q * wj.q)) <=
            1e-12);
    }
  }
  CHECK(std::abs(exact_moment(d, EventQuery::z_star(0, 1, 2, 3)) - (0.5 * 0.336 + 0.5 * 0.024)) <= 1e-12);
}

TEST_CASE("distribution has total mass one and uniform sources") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto m = random_mixture(5, {TopologyKind::tree}, {0.2, 0.8}, 0.2, 0.3 + 0.02 * seed, seed);
    auto d = enumerate_distribution(m);
    CHECK(std::abs(d.total_mass() - 1.0) <= 1e-12);
    for (Vertex u = 0; u < 5; ++u) CHECK(std::abs(d.source_mass(u) - 0.2) <= 1e-12);
  }
}

TEST_CASE("enumeration agrees with coin-vector brute force") {
  std::vector<MixtureModel> models{star4(), line4()};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    models.push_back(random_mixture(4, {TopologyKind::cycle}, {0.1, 0.9}, 0.1, 0.4, seed));
    models.push_back(random_mixture(5, {TopologyKind::tree}, {0.1, 0.9}, 0.1, 0.5, seed));
  }
  models.push_back(random_directed_mixture(4, 3, {0.1, 0.9}, 0.1, 0.3, 5));
  MixtureModel tri(3, 0.35);
  tri.set_edge(0, 1, {0.9, 0.1});
  tri.set_edge(1, 2, {0.4, 0.6});
  tri.set_edge(0, 2, {1.0, 0.0});
  models.push_back(tri);

  for (const auto& m : models) {
    auto fast = enumerate_distribution(m);
    auto slow = testsupport::brute_force_distribution(m);
    REQUIRE(fast.atoms.size() == slow.size());
    double worst = 0.0;
    for (const auto& [c, mass] : slow) {
      REQUIRE(fast.atoms.count(c) == 1);
      worst = std::max(worst, std::abs(fast.atoms.at(c) - mass));
    }
    CHECK(worst <= 1e-13);
  }
}

TEST_CASE("total variation") {
  auto a = enumerate_distribution(one_edge(0.3, 0.7));
  auto b = enumerate_distribution(one_edge(0.7, 0.3));
  auto r = distributions_equal(a, b);
  CHECK(r.equal);
  CHECK(r.tv_distance <= 1e-15);

  auto c = enumerate_distribution(one_edge(0.4, 0.7));
  r = distributions_equal(a, c);
  CHECK_FALSE(r.equal);
  // source 0 hits 1 with 0.5 vs 0.55, same for source 1
  CHECK(r.tv_distance == doctest::Approx(0.05));

  r = distributions_equal(a, a);
  CHECK(r.equal);
  CHECK(r.tv_distance == 0.0);
}

TEST_CASE("oracle budget") {
  auto big = random_mixture(10, {TopologyKind::erdos_renyi, 0.6}, {0.2, 0.8}, 0.2, 0.5, 3);
  REQUIRE(2 * big.edge_count() > static_cast<std::size_t>(kOracleBudget));
  CHECK_THROWS_WITH_AS(enumerate_distribution(big), doctest::Contains("model too large for oracle"), Error);

  auto tree = random_mixture(10, {TopologyKind::tree}, {0.2, 0.8}, 0.2, 0.5, 3);
  CHECK_NOTHROW(enumerate_distribution(tree));
}

TEST_CASE("distribution JSON lists every atom") {
  auto d = enumerate_distribution(one_edge(0.3, 0.7));
  auto j = distribution_to_json(d);
  CHECK(j["n"] == 2);
  CHECK(j["atoms"].size() == 4);
  double total = 0;
  for (const auto& a : j["atoms"]) total += a["mass"].get<double>();
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("query parsing") {
  CHECK(parse_query("Y_star 0 2 1") == EventQuery::y_star(0, 1, 2));
  CHECK(parse_query("Z_line 0 1 2 3") == EventQuery::z_line(0, 1, 2, 3));
  CHECK(to_string(parse_query("Path 1 0 2")) == "Path 1 0 2");
  CHECK_THROWS_AS(parse_query("W 0 1"), Error);
  CHECK_THROWS_AS(parse_query("X 0 0"), Error);
  CHECK_THROWS_AS(parse_query("Y_line 0 1"), Error);
}
