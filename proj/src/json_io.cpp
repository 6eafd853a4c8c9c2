#include "amt/json_io.hpp"

#include <fstream>

#include "amt/error.hpp"

namespace amt {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void to_json(nlohmann::json& j, const FrontendConfig& cfg) {
  j = {{"bins_per_octave", cfg.bins_per_octave},
       {"fmin", cfg.fmin},
       {"octaves", cfg.octaves},
       {"hop_seconds", cfg.hop_seconds},
       {"window_seconds", cfg.window_seconds},
       {"magnitude_power", cfg.magnitude_power}};
}

void from_json(const nlohmann::json& j, FrontendConfig& cfg) {
  cfg.bins_per_octave = j.value("bins_per_octave", cfg.bins_per_octave);
  cfg.fmin = j.value("fmin", cfg.fmin);
  cfg.octaves = j.value("octaves", cfg.octaves);
  cfg.hop_seconds = j.value("hop_seconds", cfg.hop_seconds);
  cfg.window_seconds = j.value("window_seconds", cfg.window_seconds);
  cfg.magnitude_power = j.value("magnitude_power", cfg.magnitude_power);
}

void to_json(nlohmann::json& j, const PlcaConfig& cfg) {
  j = {{"n_iter", cfg.n_iter}, {"tol", cfg.tol}, {"floor", cfg.floor}};
}

void from_json(const nlohmann::json& j, PlcaConfig& cfg) {
  cfg.n_iter = j.value("n_iter", cfg.n_iter);
  cfg.tol = j.value("tol", cfg.tol);
  cfg.floor = j.value("floor", cfg.floor);
}

}  // namespace amt
