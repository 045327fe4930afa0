#pragma once

// Reference oracle for tests: fixes one coin per directed attempt edge up
// front, replays the deterministic cascade, and sums over all 2^k coin
// vectors. Exponential in the attempt count, so small models only.

#include <algorithm>
#include <map>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/model.hpp"
#include "cascademix/query.hpp"

namespace testsupport {

using cascademix::Cascade;
using cascademix::MixtureModel;
using cascademix::Vertex;

struct Attempt {
  Vertex from;
  Vertex to;
  double p;
  double q;
};

inline std::vector<Attempt> attempts_of(const MixtureModel& m) {
  std::vector<Attempt> out;
  for (const auto& [e, w] : m.edges()) {
    out.push_back({e.u, e.v, w.p, w.q});
    if (!m.directed()) out.push_back({e.v, e.u, w.p, w.q});
  }
  return out;
}

inline Cascade replay(int n, Vertex source, const std::vector<Attempt>& att, unsigned coins) {
  Cascade c;
  c.source = source;
  std::vector<int> state(n, 0);  // 0 S, 1 I, 2 R
  state[source] = 1;
  for (int t = 1;; ++t) {
    std::vector<Vertex> newly;
    for (std::size_t k = 0; k < att.size(); ++k) {
      const auto& a = att[k];
      if (state[a.from] == 1 && state[a.to] == 0 && ((coins >> k) & 1u)) {
        c.events.push_back({t, a.from, a.to});
        newly.push_back(a.to);
      }
    }
    for (auto& s : state)
      if (s == 1) s = 2;
    for (Vertex v : newly) state[v] = 1;
    if (newly.empty()) break;
  }
  std::sort(c.events.begin(), c.events.end());
  return c;
}

inline std::map<Cascade, double> brute_force_distribution(const MixtureModel& m) {
  const auto att = attempts_of(m);
  const int n = m.n_vertices();
  std::map<Cascade, double> dist;
  for (int label = 1; label <= 2; ++label) {
    const double prior = label == 1 ? m.alpha() : 1.0 - m.alpha();
    for (Vertex s = 0; s < n; ++s)
      for (unsigned coins = 0; coins < (1u << att.size()); ++coins) {
        double mass = prior / n;
        for (std::size_t k = 0; k < att.size(); ++k) {
          const double w = label == 1 ? att[k].p : att[k].q;
          mass *= ((coins >> k) & 1u) ? w : 1.0 - w;
        }
        if (mass == 0.0) continue;
        dist[replay(n, s, att, coins)] += mass;
      }
  }
  return dist;
}

inline double brute_force_moment(const MixtureModel& m, const cascademix::EventQuery& q) {
  double num = 0.0, den = 0.0;
  for (const auto& [c, mass] : brute_force_distribution(m)) {
    if (c.source != q.source()) continue;
    den += mass;
    bool all = true;
    for (auto e : q.required_events()) all = all && c.has_event(e.u, e.v);
    if (all) num += mass;
  }
  return num / den;
}

}  // namespace testsupport
