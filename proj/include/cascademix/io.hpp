#pragma once

#include <string>

#include "json.hpp"

#include "cascademix/model.hpp"

namespace cascademix {

/// {"n": N, "alpha": a, "directed": bool, "edges": [[u, v, p, q], ...]}
nlohmann::json model_to_json(const MixtureModel& model);
MixtureModel model_from_json(const nlohmann::json& doc);

MixtureModel read_model_file(const std::string& path);
void write_model_file(const std::string& path, const MixtureModel& model);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cascademix
