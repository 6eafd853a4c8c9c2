#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "amt/evaluation.hpp"
#include "amt/harmonic.hpp"
#include "amt/models.hpp"
#include "amt/plca.hpp"
#include "amt/score.hpp"
#include "amt/spectrogram.hpp"
#include "amt/synth.hpp"

namespace amt {

enum class Segmentation { Threshold, OnOff, Duration };
enum class PostProcess { None, Order1, Order1Key, Order2 };

struct SystemSpec {
  std::string name;
  Segmentation segmentation = Segmentation::Threshold;
  PostProcess post = PostProcess::None;
};

// m1 threshold, m2 on/off HMM, m3 duration HMM, m4 threshold + first-order
// harmonic HMM, m4k its key-conditioned variant, m5 threshold + second-order.
SystemSpec system_spec(std::string_view name);
const std::vector<std::string>& system_names();
const char* to_string(Segmentation s);
const char* to_string(PostProcess p);

struct PipelineConfig {
  std::string system = "m1";
  FrontendConfig frontend;
  PlcaConfig plca;
  double threshold = 0.02;
  double min_duration = 0.050;  // seconds
  int max_order = 100;          // O_d, frames
  // HMM emissions use s / (s + threshold) instead of the raw normalized salience.
  bool calibrate_emissions = true;
  // Duration counts shared by all pitches.
  bool pool_durations = true;
  StateGenConfig states;
  std::vector<std::string> train_models = {"onoff", "duration", "order1", "order2", "key"};
  int threads = 0;  // 0 = hardware concurrency
  CorpusConfig synth;

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& cfg);
void from_json(const nlohmann::json& j, PipelineConfig& cfg);
// Fields present in `doc` override the defaults; unknown keys are rejected.
PipelineConfig parse_config(const nlohmann::json& doc);

// Spectrogram, activations and the globally normalized salience of one recording.
struct Analysis {
  Spectrogram spec;
  ActivationTensor activations;
  Eigen::MatrixXd normalized;
};

Analysis analyze(const AudioBuffer& audio, const TemplateBank& bank, const PipelineConfig& cfg);

struct Transcription {
  std::vector<NoteEvent> notes;
  nlohmann::json diagnostics;
};

// Segmentation and optional post-processing. Throws InvalidConfig when the
// system needs a model that `models` lacks.
Transcription transcribe_analysis(const Analysis& analysis, const TemplateBank& bank,
                                  const ModelSet& models, const PipelineConfig& cfg);

Transcription transcribe_audio(const AudioBuffer& audio, const TemplateBank& bank,
                               const ModelSet& models, const PipelineConfig& cfg);

// Reads "<pitch>_<mode>.wav" (or "<pitch>.wav", single mode) from notes_dir.
TemplateBank extract_templates(const std::filesystem::path& notes_dir, const PipelineConfig& cfg);

// Pitch sets per cluster of a reference score, as used for transition training.
std::vector<PitchSet> reference_mixtures(const ScoreTrack& track, const StateGenConfig& cfg);

// Trains the requested models on the train split of the corpus at manifest_path.
ModelSet train_models(const std::filesystem::path& manifest_path, const PipelineConfig& cfg);

// `input` is one WAV or a directory of them. Writes <stem>.mid and
// <stem>.json (diagnostics) to out_dir for each.
void transcribe_files(const std::filesystem::path& input, const TemplateBank& bank,
                      const ModelSet& models, const PipelineConfig& cfg,
                      const std::filesystem::path& out_dir);

// Every estimate must have a reference with the same stem; a reference without
// an estimate counts as an empty transcription.
EvalReport evaluate_dirs(const std::filesystem::path& est_dir, const std::filesystem::path& ref_dir,
                         const std::string& system);

}  // namespace amt
