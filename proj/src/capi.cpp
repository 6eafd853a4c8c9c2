#include "amt/amt.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "amt/audio.hpp"
#include "amt/error.hpp"
#include "amt/json_io.hpp"
#include "amt/log.hpp"
#include "amt/pipeline.hpp"
#include "amt/spectrogram.hpp"

struct amt_audio {
  amt::AudioBuffer buffer;
};

struct amt_spectrogram {
  amt::Spectrogram spec;
};

struct amt_score {
  amt::ScoreTrack track;
};

namespace {

thread_local std::string last_error;

amt_status status_of(amt::ErrorCode code) {
  using amt::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return AMT_E_INVALID_ARGUMENT;
    case ErrorCode::UnreadableFile: return AMT_E_UNREADABLE_FILE;
    case ErrorCode::UnsupportedEncoding: return AMT_E_UNSUPPORTED_ENCODING;
    case ErrorCode::EmptyAudio: return AMT_E_EMPTY_AUDIO;
    case ErrorCode::InvalidConfig: return AMT_E_INVALID_CONFIG;
    case ErrorCode::AllSilent: return AMT_E_ALL_SILENT;
    case ErrorCode::DimensionMismatch: return AMT_E_DIMENSION_MISMATCH;
    case ErrorCode::EmptyTraining: return AMT_E_EMPTY_TRAINING;
    case ErrorCode::MalformedFile: return AMT_E_MALFORMED_FILE;
    case ErrorCode::IoFailure: return AMT_E_IO_FAILURE;
    case ErrorCode::OutOfRange: return AMT_E_OUT_OF_RANGE;
    case ErrorCode::EmptyLibrary: return AMT_E_EMPTY_LIBRARY;
    case ErrorCode::SplitLeakage: return AMT_E_SPLIT_LEAKAGE;
    case ErrorCode::BankMismatch: return AMT_E_BANK_MISMATCH;
    case ErrorCode::MissingPair: return AMT_E_MISSING_PAIR;
    case ErrorCode::ModelStateMismatch: return AMT_E_MODEL_STATE_MISMATCH;
    case ErrorCode::Internal: return AMT_E_INTERNAL;
  }
  return AMT_E_INTERNAL;
}

// Runs f, translating exceptions into status codes and recording the message.
template <typename F>
amt_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return AMT_OK;
  } catch (const amt::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return AMT_E_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) throw amt::Error(amt::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

amt::PipelineConfig config_from(const char* config_json) {
  nlohmann::json doc;
  if (config_json && *config_json) {
    try {
      doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw amt::Error(amt::ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
  }
  return amt::parse_config(doc);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw amt::Error(amt::ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
}

}  // namespace

extern "C" {

const char* amt_version(void) { return "1.0.0"; }

const char* amt_status_name(amt_status status) {
  if (status == AMT_OK) return "Ok";
  if (status < AMT_OK || status > AMT_E_INTERNAL) return "Unknown";
  return amt::to_string(static_cast<amt::ErrorCode>(int(status) - 1));
}

const char* amt_last_error(void) { return last_error.c_str(); }

int amt_exit_code(amt_status status) {
  if (status == AMT_OK) return 0;
  return status == AMT_E_INTERNAL ? 2 : 1;
}

void amt_string_free(char* s) { std::free(s); }

amt_status amt_config_resolve(const char* config_json, char** resolved_json) {
  return guard([&] {
    require(resolved_json, "resolved_json");
    *resolved_json = copy_string(nlohmann::json(config_from(config_json)).dump(2));
  });
}

amt_status amt_audio_load(const char* path, amt_audio** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<amt_audio>();
    handle->buffer = amt::load_audio(path);
    *out = handle.release();
  });
}

size_t amt_audio_length(const amt_audio* audio) { return audio ? audio->buffer.samples.size() : 0; }

int amt_audio_sample_rate(const amt_audio* audio) { return audio ? audio->buffer.sample_rate : 0; }

void amt_audio_free(amt_audio* audio) { delete audio; }

amt_status amt_spectrogram_compute(const amt_audio* audio, const char* config_json,
                                   amt_spectrogram** out) {
  return guard([&] {
    require(audio, "audio");
    require(out, "out");
    *out = nullptr;
    const auto cfg = config_from(config_json);
    auto handle = std::make_unique<amt_spectrogram>();
    handle->spec = amt::compute_spectrogram(audio->buffer, cfg.frontend);
    *out = handle.release();
  });
}

size_t amt_spectrogram_bins(const amt_spectrogram* spec) {
  return spec ? size_t(spec->spec.n_bins()) : 0;
}

size_t amt_spectrogram_frames(const amt_spectrogram* spec) {
  return spec ? size_t(spec->spec.n_frames()) : 0;
}

double amt_spectrogram_value(const amt_spectrogram* spec, size_t bin, size_t frame) {
  if (!spec || bin >= size_t(spec->spec.n_bins()) || frame >= size_t(spec->spec.n_frames())) return 0.0;
  return spec->spec.magnitudes(Eigen::Index(bin), Eigen::Index(frame));
}

amt_status amt_spectrogram_write_csv(const amt_spectrogram* spec, const char* path) {
  return guard([&] {
    require(spec, "spec");
    require(path, "path");
    amt::write_spectrogram_csv(spec->spec, std::filesystem::path(path));
  });
}

void amt_spectrogram_free(amt_spectrogram* spec) { delete spec; }

amt_status amt_score_read(const char* path, amt_score** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<amt_score>();
    handle->track = amt::read_midi(path);
    *out = handle.release();
  });
}

amt_status amt_score_write(const amt_score* score, const char* path) {
  return guard([&] {
    require(score, "score");
    require(path, "path");
    amt::write_midi(score->track, path);
  });
}

size_t amt_score_size(const amt_score* score) { return score ? score->track.events.size() : 0; }

amt_status amt_score_note(const amt_score* score, size_t index, amt_note* out) {
  return guard([&] {
    require(score, "score");
    require(out, "out");
    if (index >= score->track.events.size()) {
      throw amt::Error(amt::ErrorCode::OutOfRange, "note index out of range");
    }
    const auto& e = score->track.events[index];
    *out = amt_note{e.pitch, e.onset, e.offset, e.velocity};
  });
}

void amt_score_free(amt_score* score) { delete score; }

amt_status amt_extract_templates(const char* notes_dir, const char* config_json, const char* out_dir) {
  return guard([&] {
    require(notes_dir, "notes_dir");
    require(out_dir, "out_dir");
    const auto cfg = config_from(config_json);
    const auto bank = amt::extract_templates(notes_dir, cfg);
    amt::save_bank(bank, out_dir);
    amt::logger().info("bank: {} pitches x {} modes", bank.n_pitches(), bank.n_modes());
  });
}

amt_status amt_train(const char* manifest_path, const char* config_json, const char* out_dir) {
  return guard([&] {
    require(manifest_path, "manifest_path");
    require(out_dir, "out_dir");
    const auto cfg = config_from(config_json);
    amt::save_models(amt::train_models(manifest_path, cfg), out_dir);
  });
}

amt_status amt_transcribe(const char* input, const char* bank_dir, const char* models_dir,
                          const char* config_json, const char* out_dir) {
  return guard([&] {
    require(input, "input");
    require(bank_dir, "bank_dir");
    require(out_dir, "out_dir");
    const auto cfg = config_from(config_json);
    const auto bank = amt::load_bank(bank_dir);
    const amt::ModelSet models =
        models_dir && *models_dir ? amt::load_models(models_dir) : amt::ModelSet{};
    amt::transcribe_files(input, bank, models, cfg, out_dir);
  });
}

amt_status amt_evaluate(const char* est_dir, const char* ref_dir, const char* config_json,
                        const char* out_dir, char** table) {
  return guard([&] {
    require(est_dir, "est_dir");
    require(ref_dir, "ref_dir");
    if (table) *table = nullptr;
    const auto cfg = config_from(config_json);
    const amt::EvalReport report = amt::evaluate_dirs(est_dir, ref_dir, cfg.system);
    const std::string text = amt::format_table(std::span(&report, 1));
    if (out_dir && *out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) throw amt::Error(amt::ErrorCode::IoFailure, std::string("cannot create ") + out_dir);
      amt::write_json(report.to_json(), std::filesystem::path(out_dir) / "report.json");
      write_text(text, std::filesystem::path(out_dir) / "report.txt");
    }
    if (table) *table = copy_string(text);
  });
}

amt_status amt_synth(const char* config_json, const char* out_dir) {
  return guard([&] {
    require(out_dir, "out_dir");
    const auto cfg = config_from(config_json);
    amt::make_corpus(amt::default_instrument(), cfg.synth, out_dir);
  });
}

}  // extern "C"
