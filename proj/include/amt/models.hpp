#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amt/harmonic.hpp"
#include "amt/segmentation.hpp"

namespace amt {

// Trained musicological models. Absent members were not requested at training time.
struct ModelSet {
  std::optional<OnOffModels> on_off;
  std::optional<DurationModels> duration;
  std::optional<TransitionModel> order1;
  std::optional<TransitionModel> order2;
  std::optional<KeyConditionedModel> keyed;
  std::vector<std::string> provenance;  // training sequence ids
  std::vector<std::string> keys;        // detected key label per training id
};

nlohmann::json on_off_to_json(const OnOffModels& models);
OnOffModels on_off_from_json(const nlohmann::json& j);
nlohmann::json duration_to_json(const DurationModels& models);
DurationModels duration_from_json(const nlohmann::json& j);
nlohmann::json transition_to_json(const TransitionModel& model);
TransitionModel transition_from_json(const nlohmann::json& j);
nlohmann::json keyed_to_json(const KeyConditionedModel& model);
KeyConditionedModel keyed_from_json(const nlohmann::json& j);

// Files: onoff.json, duration.json, order1.json, order2.json, key.json.
void save_models(const ModelSet& models, const std::filesystem::path& dir);
// Loads whichever model files exist in `dir`.
ModelSet load_models(const std::filesystem::path& dir);

}  // namespace amt
