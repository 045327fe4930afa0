#include "cascademix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/core.h>

namespace cascademix {

namespace {

struct Arc {
  Vertex target;
  double w;
};

// Explores the process tree of one (label, source) block. Only attempts that
// actually happen are branched on, and zero-probability branches are dropped,
// which is the same product measure as fixing every attempt coin up front.
class Enumerator {
 public:
  Enumerator(std::vector<std::vector<Arc>> adj, std::map<Cascade, double>& atoms)
      : adj_(std::move(adj)), atoms_(atoms), state_(adj_.size(), 0) {}

  void run(Vertex source, double mass) {
    record_.source = source;
    record_.events.clear();
    std::fill(state_.begin(), state_.end(), 0);
    state_[source] = 1;
    step({source}, 1, mass);
  }

 private:
  struct Attempt {
    Vertex from;
    Vertex to;
    double w;
  };

  // state_: 0 susceptible, 1 infected, 2 removed
  void step(const std::vector<Vertex>& infected, int t, double mass) {
    if (infected.empty()) {
      Cascade c = record_;
      std::sort(c.events.begin(), c.events.end());
      atoms_[c] += mass;
      return;
    }
    std::vector<Attempt> attempts;
    for (Vertex u : infected)
      for (const Arc& arc : adj_[u])
        if (state_[arc.target] == 0 && arc.w > 0.0) attempts.push_back({u, arc.target, arc.w});
    for (Vertex u : infected) state_[u] = 2;
    branch(attempts, 0, t, mass);
    for (Vertex u : infected) state_[u] = 1;
  }

  void branch(const std::vector<Attempt>& attempts, std::size_t k, int t, double mass) {
    if (k == attempts.size()) {
      std::vector<Vertex> next;
      for (std::size_t i = record_.events.size(); i-- > 0 && record_.events[i].time == t;)
        next.push_back(record_.events[i].infectee);
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      for (Vertex v : next) state_[v] = 1;
      step(next, t + 1, mass);
      for (Vertex v : next) state_[v] = 0;
      return;
    }
    const Attempt& a = attempts[k];
    if (a.w < 1.0) branch(attempts, k + 1, t, mass * (1.0 - a.w));
    record_.events.push_back({t, a.from, a.to});
    branch(attempts, k + 1, t, mass * a.w);
    record_.events.pop_back();
  }

  std::vector<std::vector<Arc>> adj_;
  std::map<Cascade, double>& atoms_;
  std::vector<int> state_;
  Cascade record_;
};

bool matches(const Cascade& c, const EventQuery& q) {
  if (c.source != q.source()) return false;
  for (auto e : q.required_events())
    if (!c.has_event(e.u, e.v)) return false;
  return true;
}

}  // namespace

double OutcomeDistribution::total_mass() const {
  double total = 0.0;
  for (const auto& [c, m] : atoms) total += m;
  return total;
}

double OutcomeDistribution::source_mass(Vertex u) const {
  double total = 0.0;
  for (const auto& [c, m] : atoms)
    if (c.source == u) total += m;
  return total;
}

OutcomeDistribution enumerate_distribution(const MixtureModel& model) {
  const int attempt_edges = static_cast<int>(model.edge_count()) * (model.directed() ? 1 : 2);
  if (attempt_edges > kOracleBudget)
    throw Error(fmt::format("model too large for oracle ({} attempt edges, budget {})",
                            attempt_edges, kOracleBudget));

  OutcomeDistribution dist;
  dist.n_vertices = model.n_vertices();
  const double source_weight = 1.0 / model.n_vertices();
  for (int label = 1; label <= 2; ++label) {
    std::vector<std::vector<Arc>> adj(model.n_vertices());
    for (const auto& [e, w] : model.edges()) {
      double x = label == 1 ? w.p : w.q;
      adj[e.u].push_back({e.v, x});
      if (!model.directed()) adj[e.v].push_back({e.u, x});
    }
    for (auto& list : adj)
      std::sort(list.begin(), list.end(), [](const Arc& a, const Arc& b) { return a.target < b.target; });
    const double prior = label == 1 ? model.alpha() : 1.0 - model.alpha();
    Enumerator walk(std::move(adj), dist.atoms);
    for (Vertex s = 0; s < model.n_vertices(); ++s) walk.run(s, prior * source_weight);
  }
  return dist;
}

double exact_moment(const OutcomeDistribution& dist, const EventQuery& q) {
  for (int i = 0; i < q.arity(); ++i)
    if (q.v[i] < 0 || q.v[i] >= dist.n_vertices)
      throw Error(fmt::format("query '{}' names a vertex outside [0, {})", to_string(q), dist.n_vertices));
  double num = 0.0;
  double den = 0.0;
  for (const auto& [c, m] : dist.atoms) {
    if (c.source != q.source()) continue;
    den += m;
    if (matches(c, q)) num += m;
  }
  return num / den;
}

double exact_moment(const MixtureModel& model, const EventQuery& q) {
  return exact_moment(enumerate_distribution(model), q);
}

DistributionComparison distributions_equal(const OutcomeDistribution& a,
                                           const OutcomeDistribution& b, double tol) {
  if (a.n_vertices != b.n_vertices) throw Error("distributions over different vertex sets");
  double sum = 0.0;
  for (const auto& [c, m] : a.atoms) {
    auto it = b.atoms.find(c);
    sum += std::abs(m - (it == b.atoms.end() ? 0.0 : it->second));
  }
  for (const auto& [c, m] : b.atoms)
    if (!a.atoms.count(c)) sum += m;
  DistributionComparison out;
  out.tv_distance = 0.5 * sum;
  out.equal = out.tv_distance <= tol;
  return out;
}

nlohmann::json distribution_to_json(const OutcomeDistribution& dist) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& [c, m] : dist.atoms) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : c.events) ev.push_back({e.time, e.infector, e.infectee});
    atoms.push_back({{"src", c.source}, {"ev", ev}, {"mass", m}});
  }
  return {{"n", dist.n_vertices}, {"atoms", atoms}};
}

}  // namespace cascademix
