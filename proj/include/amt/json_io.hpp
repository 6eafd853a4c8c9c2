#pragma once

#include <json.hpp>

#include <filesystem>

#include "amt/plca.hpp"
#include "amt/spectrogram.hpp"

namespace amt {

nlohmann::json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; output is byte-stable for equal input.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

void to_json(nlohmann::json& j, const FrontendConfig& cfg);
void from_json(const nlohmann::json& j, FrontendConfig& cfg);
void to_json(nlohmann::json& j, const PlcaConfig& cfg);
void from_json(const nlohmann::json& j, PlcaConfig& cfg);

}  // namespace amt
