#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"

#include "cascademix/cascade.hpp"

using namespace cascademix;

namespace {

MixtureModel star4(WeightPair ua, WeightPair ub, WeightPair uc) {
  MixtureModel m(4, 0.5);
  m.set_edge(0, 1, ua);
  m.set_edge(0, 2, ub);
  m.set_edge(0, 3, uc);
  return m;
}

std::string dump(const CascadeCorpus& c) {
  std::ostringstream out;
  write_corpus(out, c);
  return out.str();
}

}  // namespace

TEST_CASE("certain edge always fires once") {
  MixtureModel m(2, 0.5);
  m.set_edge(0, 1, {1.0, 1.0});
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = substream(3, i);
    auto c = run_cascade(m, rng);
    REQUIRE(c.events.size() == 1);
    CHECK(c.events[0].time == 1);
    CHECK(c.events[0].infector == c.source);
    CHECK(c.events[0].infectee == 1 - c.source);
  }
}

TEST_CASE("zero weights give source-only cascades") {
  MixtureModel m(5, 0.5);
  m.set_edge(0, 1, {0.0, 0.0});
  auto corpus = run_corpus(m, 500, 11);
  for (const auto& c : corpus.cascades) CHECK(c.events.empty());
}

TEST_CASE("saturated star infects every leaf at step one") {
  auto m = star4({1, 1}, {1, 1}, {1, 1});
  int seen = 0;
  for (std::uint64_t i = 0; i < 400; ++i) {
    auto rng = substream(5, i);
    auto c = run_cascade(m, rng);
    if (c.source != 0) {
      // leaf source: infects the hub, which then infects the other two leaves
      REQUIRE(c.events.size() == 3);
      CHECK(c.events[0] == InfectionEvent{1, c.source, 0});
      CHECK(c.events[1].time == 2);
      continue;
    }
    ++seen;
    REQUIRE(c.events.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(c.events[k] == InfectionEvent{1, 0, k + 1});
  }
  CHECK(seen > 0);
}

TEST_CASE("simultaneous attempts are all recorded") {
  // triangle with certain edges: from source 0 both 1 and 2 are hit at t=1,
  // and 1-2 is never attempted because both are already infected
  MixtureModel m(3, 0.5);
  m.set_edge(0, 1, {1, 1});
  m.set_edge(0, 2, {1, 1});
  m.set_edge(1, 2, {1, 1});
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto rng = substream(1, i);
    auto c = run_cascade(m, rng);
    CHECK(c.events.size() == 2);
    for (const auto& e : c.events) CHECK(e.time == 1);
  }

  // two infected vertices attacking the same target in one step
  MixtureModel d(4, 0.5);
  d.set_edge(0, 1, {1, 1});
  d.set_edge(0, 2, {1, 1});
  d.set_edge(1, 3, {1, 1});
  d.set_edge(2, 3, {1, 1});
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = substream(2, i);
    auto c = run_cascade(d, rng);
    if (c.source != 0) continue;
    REQUIRE(c.events.size() == 4);
    CHECK(c.has_event(1, 3));
    CHECK(c.has_event(2, 3));
    CHECK(c.events[2].time == 2);
    CHECK(c.events[3].time == 2);
  }
}

TEST_CASE("events are sorted and each vertex is infected in one step") {
  auto m = random_mixture(8, {TopologyKind::erdos_renyi, 0.5}, {0.2, 0.8}, 0.2, 0.5, 4);
  auto corpus = run_corpus(m, 2000, 9);
  for (const auto& c : corpus.cascades) {
    CHECK(std::is_sorted(c.events.begin(), c.events.end()));
    std::map<Vertex, int> when;
    when[c.source] = 0;
    for (const auto& e : c.events) {
      CHECK(m.has_edge(e.infector, e.infectee));
      REQUIRE(when.count(e.infector));
      CHECK(when[e.infector] == e.time - 1);
      auto [it, fresh] = when.emplace(e.infectee, e.time);
      if (!fresh) CHECK(it->second == e.time);
    }
  }
}

TEST_CASE("corpus is independent of worker count") {
  auto m = star4({0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4});
  auto a = run_corpus(m, 1000, 7, 1);
  auto b = run_corpus(m, 1000, 7, 8);
  CHECK(dump(a) == dump(b));
  auto c = run_corpus(m, 1000, 8, 1);
  CHECK(dump(a) != dump(c));
}

TEST_CASE("source frequencies are uniform") {
  auto m = random_mixture(5, {TopologyKind::line}, {0.2, 0.8}, 0.2, 0.5, 3);
  const std::size_t count = 1000000;
  auto corpus = run_corpus(m, count, 7, 8);
  std::vector<double> freq(5, 0.0);
  for (const auto& c : corpus.cascades) freq[c.source] += 1;
  const double mean = count / 5.0;
  const double sd = std::sqrt(count * 0.2 * 0.8);
  for (double f : freq) CHECK(std::abs(f - mean) <= 4 * sd);
}

TEST_CASE("two-node infection rate matches the mixture average") {
  MixtureModel m(2, 0.5);
  m.set_edge(0, 1, {0.3, 0.7});
  auto corpus = run_corpus(m, 1000000, 17, 8);
  double src = 0, hit = 0;
  for (const auto& c : corpus.cascades)
    if (c.source == 0) {
      ++src;
      hit += c.has_event(0, 1);
    }
  CHECK(std::abs(hit / src - 0.5) <= 0.002);
}

TEST_CASE("component prior is respected") {
  MixtureModel m(3, 0.25);
  m.set_edge(0, 1, {1.0, 0.0});
  m.set_edge(1, 2, {1.0, 0.0});
  auto corpus = run_corpus(m, 200000, 5, 4, true);
  REQUIRE(corpus.labels.size() == corpus.size());
  double ones = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ones += corpus.labels[i] == 1;
    CHECK((corpus.labels[i] == 1) == !corpus.cascades[i].events.empty());
  }
  const double sd = std::sqrt(0.25 * 0.75 / 200000.0);
  CHECK(std::abs(ones / 200000.0 - 0.25) <= 4 * sd);
}

TEST_CASE("corpus serialization round trip") {
  auto m = random_mixture(6, {TopologyKind::tree}, {0.2, 0.8}, 0.2, 0.5, 2);
  auto corpus = run_corpus(m, 300, 99, 2, true);
  CHECK(corpus.model_digest == model_digest(m));
  auto text = dump(corpus);
  std::istringstream in(text);
  auto back = read_corpus(in);
  CHECK(back.n_vertices == 6);
  CHECK(back.seed == 99);
  CHECK(back.model_digest == corpus.model_digest);
  CHECK(back.cascades == corpus.cascades);
  CHECK(back.labels.empty());
  CHECK(dump(back) == text);

  std::ostringstream lab;
  write_labels(lab, corpus);
  CHECK(lab.str().rfind("{\"index\":0,\"b\":", 0) == 0);

  std::istringstream truncated(text.substr(0, text.rfind('{')));
  CHECK_THROWS_AS(read_corpus(truncated), Error);
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_WITH_AS(run_corpus(star4({0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}), 0, 1), "empty corpus", Error);
}
