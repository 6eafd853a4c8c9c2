// Command-line front end over the C interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "amt/amt.h"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> system;
  std::optional<unsigned long long> seed;
  std::optional<double> threshold;
  std::optional<double> min_dur_ms;
  std::optional<int> order;
  std::optional<int> polyphony;
  std::optional<int> sequences;
};

// Config file contents with command-line flags applied on top.
bool build_config(const Overrides& o, std::string& out) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::fprintf(stderr, "error: cannot open config %s\n", o.config_path.c_str());
      return false;
    }
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      std::fprintf(stderr, "error: %s: %s\n", o.config_path.c_str(), e.what());
      return false;
    }
    if (!doc.is_object()) {
      std::fprintf(stderr, "error: %s: config must be a JSON object\n", o.config_path.c_str());
      return false;
    }
  }
  if (o.system) doc["system"] = *o.system;
  if (o.threshold) doc["threshold"] = *o.threshold;
  if (o.min_dur_ms) doc["min_dur_ms"] = *o.min_dur_ms;
  if (o.order) doc["order"] = *o.order;
  if (o.seed) doc["synth"]["seed"] = *o.seed;
  if (o.polyphony) doc["synth"]["polyphony"] = *o.polyphony;
  if (o.sequences) doc["synth"]["n_sequences"] = *o.sequences;
  out = doc.dump();
  return true;
}

int report(amt_status status, const char* command) {
  if (status != AMT_OK) {
    std::fprintf(stderr, "%s failed [%s]: %s\n", command, amt_status_name(status), amt_last_error());
  }
  return amt_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polyphonic music transcription with PLCA and HMM post-processing"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  std::string out_dir;
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--system", o.system, "AMT system")
      ->check(CLI::IsMember({"m1", "m2", "m3", "m4", "m4k", "m5"}));
  app.add_option("--seed", o.seed, "Corpus seed");
  app.add_option("--threshold", o.threshold, "Detection threshold (default 0.02)");
  app.add_option("--min-dur", o.min_dur_ms, "Minimum note duration in ms (default 50)");
  app.add_option("--order", o.order, "Duration HMM order O_d in frames (default 100)");
  app.add_option("--out", out_dir, "Output directory");

  auto* extract = app.add_subcommand("extract-templates", "Build a template bank from isolated notes");
  std::string notes_dir;
  extract->add_option("notes_dir", notes_dir, "Directory of <pitch>_<mode>.wav files")->required();

  auto* train = app.add_subcommand("train", "Train segmentation and transition models");
  std::string manifest;
  train->add_option("manifest", manifest, "Corpus manifest.json")->required();

  auto* transcribe = app.add_subcommand("transcribe", "Transcribe WAV files to MIDI");
  std::string input, bank_dir, models_dir;
  transcribe->add_option("input", input, "WAV file or directory")->required();
  transcribe->add_option("--bank", bank_dir, "Template bank directory")->required();
  transcribe->add_option("--models", models_dir, "Trained model directory");

  auto* evaluate = app.add_subcommand("evaluate", "Score transcriptions against reference MIDI");
  std::string est_dir, ref_dir;
  evaluate->add_option("est_dir", est_dir, "Directory of transcribed .mid files")->required();
  evaluate->add_option("ref_dir", ref_dir, "Directory of reference .mid files")->required();

  auto* synth = app.add_subcommand("synth", "Render the synthetic corpus");
  synth->add_option("--polyphony", o.polyphony, "Maximum simultaneous notes");
  synth->add_option("--sequences", o.sequences, "Number of sequences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  std::string config;
  if (!build_config(o, config)) return 1;
  auto need_out = [&](const char* command) {
    if (!out_dir.empty()) return true;
    std::fprintf(stderr, "%s: --out is required\n", command);
    return false;
  };

  if (extract->parsed()) {
    if (!need_out("extract-templates")) return 1;
    return report(amt_extract_templates(notes_dir.c_str(), config.c_str(), out_dir.c_str()),
                  "extract-templates");
  }
  if (train->parsed()) {
    if (!need_out("train")) return 1;
    return report(amt_train(manifest.c_str(), config.c_str(), out_dir.c_str()), "train");
  }
  if (transcribe->parsed()) {
    if (!need_out("transcribe")) return 1;
    return report(amt_transcribe(input.c_str(), bank_dir.c_str(), models_dir.c_str(), config.c_str(),
                                 out_dir.c_str()),
                  "transcribe");
  }
  if (evaluate->parsed()) {
    char* table = nullptr;
    const amt_status status =
        amt_evaluate(est_dir.c_str(), ref_dir.c_str(), config.c_str(), out_dir.c_str(), &table);
    if (table) {
      std::fputs(table, stdout);
      amt_string_free(table);
    }
    return report(status, "evaluate");
  }
  if (synth->parsed()) {
    if (!need_out("synth")) return 1;
    return report(amt_synth(config.c_str(), out_dir.c_str()), "synth");
  }
  return 1;
}
