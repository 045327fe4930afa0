#include "cascademix/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace cascademix {

nlohmann::json model_to_json(const MixtureModel& model) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [e, w] : model.edges()) edges.push_back({e.u, e.v, w.p, w.q});
  return {{"n", model.n_vertices()},
          {"alpha", model.alpha()},
          {"directed", model.directed()},
          {"edges", edges}};
}

MixtureModel model_from_json(const nlohmann::json& doc) {
  try {
    MixtureModel model(doc.at("n").get<int>(), doc.at("alpha").get<double>(),
                       doc.value("directed", false));
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 4) throw Error("each edge must be [u, v, p, q]");
      model.set_edge(e[0].get<Vertex>(), e[1].get<Vertex>(),
                     {e[2].get<double>(), e[3].get<double>()});
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("bad model document: {}", e.what()));
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("cannot parse '{}': {}", path, e.what()));
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
  out << text;
  if (!out) throw Error(fmt::format("write to '{}' failed", path));
}

MixtureModel read_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

void write_model_file(const std::string& path, const MixtureModel& model) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

}  // namespace cascademix
