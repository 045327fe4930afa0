#include "cascademix/cascade.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "cascademix/io.hpp"

namespace cascademix {

namespace {

struct Arc {
  Vertex target;
  double w1;
  double w2;
};

std::vector<std::vector<Arc>> weighted_adjacency(const MixtureModel& model) {
  std::vector<std::vector<Arc>> adj(model.n_vertices());
  for (const auto& [e, w] : model.edges()) {
    adj[e.u].push_back({e.v, w.p, w.q});
    if (!model.directed()) adj[e.v].push_back({e.u, w.p, w.q});
  }
  for (auto& list : adj)
    std::sort(list.begin(), list.end(),
              [](const Arc& a, const Arc& b) { return a.target < b.target; });
  return adj;
}

enum class State : unsigned char { susceptible, infected, removed };

LabeledCascade simulate(const std::vector<std::vector<Arc>>& adj, double alpha, Stream& rng) {
  const auto n = static_cast<Vertex>(adj.size());
  LabeledCascade out;
  out.component = rng.uniform() < alpha ? 1 : 2;
  const bool first = out.component == 1;
  out.cascade.source = static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(n)));

  std::vector<State> state(n, State::susceptible);
  std::vector<Vertex> infected{out.cascade.source};
  std::vector<Vertex> next;
  std::vector<char> hit(n, 0);
  state[out.cascade.source] = State::infected;

  for (int t = 1; !infected.empty(); ++t) {
    next.clear();
    for (Vertex u : infected) {
      for (const Arc& arc : adj[u]) {
        // Targets infected earlier in this same step are still susceptible
        // until the step ends, so simultaneous infectors are all recorded.
        if (state[arc.target] != State::susceptible) continue;
        if (rng.uniform() < (first ? arc.w1 : arc.w2)) {
          out.cascade.events.push_back({t, u, arc.target});
          if (!hit[arc.target]) {
            hit[arc.target] = 1;
            next.push_back(arc.target);
          }
        }
      }
    }
    for (Vertex u : infected) state[u] = State::removed;
    for (Vertex v : next) state[v] = State::infected;
    std::sort(next.begin(), next.end());
    infected.swap(next);
  }
  std::sort(out.cascade.events.begin(), out.cascade.events.end());
  return out;
}

}  // namespace

bool Cascade::has_event(Vertex infector, Vertex infectee) const {
  return std::any_of(events.begin(), events.end(), [&](const InfectionEvent& e) {
    return e.infector == infector && e.infectee == infectee;
  });
}

LabeledCascade simulate_cascade(const MixtureModel& model, Stream& rng) {
  return simulate(weighted_adjacency(model), model.alpha(), rng);
}

CascadeCorpus run_corpus(const MixtureModel& model, std::size_t count, std::uint64_t seed,
                         int workers, bool keep_labels) {
  if (count == 0) throw Error("empty corpus");
  CascadeCorpus corpus;
  corpus.n_vertices = model.n_vertices();
  corpus.seed = seed;
  corpus.model_digest = model_digest(model);
  corpus.cascades.resize(count);
  std::vector<int> labels(count);

  const auto adj = weighted_adjacency(model);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = substream(seed, i);
      auto result = simulate(adj, model.alpha(), rng);
      corpus.cascades[i] = std::move(result.cascade);
      labels[i] = result.component;
    }
  };

  const std::size_t shards = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, count);
  if (shards == 1) {
    work(0, count);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t s = 0; s < shards; ++s)
      pool.emplace_back(work, count * s / shards, count * (s + 1) / shards);
    for (auto& th : pool) th.join();
  }
  if (keep_labels) corpus.labels = std::move(labels);
  return corpus;
}

std::string model_digest(const MixtureModel& model) {
  const std::string text = model_to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

void write_corpus(std::ostream& out, const CascadeCorpus& corpus) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{{\"n\":{},\"M\":{},\"seed\":{},\"model_digest\":\"{}\"}}\n",
                 corpus.n_vertices, corpus.size(), corpus.seed, corpus.model_digest);
  for (const auto& c : corpus.cascades) {
    fmt::format_to(std::back_inserter(buf), "{{\"src\":{},\"ev\":[", c.source);
    for (std::size_t k = 0; k < c.events.size(); ++k) {
      const auto& e = c.events[k];
      fmt::format_to(std::back_inserter(buf), "{}[{},{},{}]", k ? "," : "", e.time, e.infector,
                     e.infectee);
    }
    fmt::format_to(std::back_inserter(buf), "]}}\n");
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_labels(std::ostream& out, const CascadeCorpus& corpus) {
  for (std::size_t i = 0; i < corpus.labels.size(); ++i)
    out << "{\"index\":" << i << ",\"b\":" << corpus.labels[i] << "}\n";
}

CascadeCorpus read_corpus(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("corpus file is empty");
  CascadeCorpus corpus;
  std::size_t declared = 0;
  try {
    auto header = nlohmann::json::parse(line);
    corpus.n_vertices = header.at("n").get<int>();
    declared = header.at("M").get<std::size_t>();
    corpus.seed = header.at("seed").get<std::uint64_t>();
    corpus.model_digest = header.at("model_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("bad corpus header: {}", e.what()));
  }
  corpus.cascades.reserve(declared);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto doc = nlohmann::json::parse(line);
      Cascade c;
      c.source = doc.at("src").get<Vertex>();
      for (const auto& ev : doc.at("ev"))
        c.events.push_back({ev.at(0).get<int>(), ev.at(1).get<Vertex>(), ev.at(2).get<Vertex>()});
      std::sort(c.events.begin(), c.events.end());
      corpus.cascades.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw Error(fmt::format("bad corpus line {}: {}", line_no, e.what()));
    }
  }
  if (corpus.cascades.size() != declared)
    throw Error(fmt::format("corpus header declares {} cascades but {} were read", declared,
                            corpus.cascades.size()));
  return corpus;
}

}  // namespace cascademix
