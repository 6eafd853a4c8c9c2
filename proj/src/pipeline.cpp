#include "amt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "amt/error.hpp"
#include "amt/json_io.hpp"
#include "amt/log.hpp"
#include "amt/segmentation.hpp"

namespace amt {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<std::filesystem::path> files_with_extension(const std::filesystem::path& dir,
                                                        const std::string& ext) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::UnreadableFile, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

// Re-raises a library error with the offending file named in the message.
template <typename F>
auto for_file(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw Error(e.code(), path.string() + ": " + what);
  }
}

Eigen::MatrixXd emission_input(const Eigen::MatrixXd& normalized, const PipelineConfig& cfg) {
  return cfg.calibrate_emissions ? salience_to_posterior(normalized, cfg.threshold) : normalized;
}

std::vector<NoteEvent> segment(const Analysis& analysis, const TemplateBank& bank,
                               const ModelSet& models, const PipelineConfig& cfg, Segmentation kind) {
  const double hop = analysis.spec.hop;
  if (kind == Segmentation::Threshold) {
    return threshold_segment(analysis.normalized, bank.pitches, cfg.threshold, cfg.min_duration, hop);
  }
  if (kind == Segmentation::OnOff && !models.on_off) {
    throw Error(ErrorCode::InvalidConfig, "system " + cfg.system + " needs an on/off model");
  }
  if (kind == Segmentation::Duration && !models.duration) {
    throw Error(ErrorCode::InvalidConfig, "system " + cfg.system + " needs a duration model");
  }
  const Eigen::MatrixXd y = emission_input(analysis.normalized, cfg);
  std::vector<NoteEvent> events;
  std::vector<double> row(static_cast<size_t>(y.cols()));
  for (int i = 0; i < bank.n_pitches(); ++i) {
    const int pitch = bank.pitches[size_t(i)];
    for (Eigen::Index t = 0; t < y.cols(); ++t) row[size_t(t)] = y(i, t);
    const StatePath path = kind == Segmentation::OnOff
                               ? viterbi_on_off(row, models.on_off->for_pitch(pitch))
                               : viterbi_duration(row, models.duration->for_pitch(pitch));
    auto found = path_to_events(path, pitch, hop, cfg.min_duration);
    events.insert(events.end(), found.begin(), found.end());
  }
  std::stable_sort(events.begin(), events.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return std::tie(a.onset, a.pitch) < std::tie(b.onset, b.pitch);
  });
  return events;
}

const std::set<std::string>& known_models() {
  static const std::set<std::string> names = {"onoff", "duration", "order1", "order2", "key"};
  return names;
}

}  // namespace

SystemSpec system_spec(std::string_view name) {
  if (name == "m1") return {"m1", Segmentation::Threshold, PostProcess::None};
  if (name == "m2") return {"m2", Segmentation::OnOff, PostProcess::None};
  if (name == "m3") return {"m3", Segmentation::Duration, PostProcess::None};
  if (name == "m4") return {"m4", Segmentation::Threshold, PostProcess::Order1};
  if (name == "m4k") return {"m4k", Segmentation::Threshold, PostProcess::Order1Key};
  if (name == "m5") return {"m5", Segmentation::Threshold, PostProcess::Order2};
  throw Error(ErrorCode::InvalidConfig, "unknown system '" + std::string(name) + "'");
}

const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names = {"m1", "m2", "m3", "m4", "m4k", "m5"};
  return names;
}

const char* to_string(Segmentation s) {
  switch (s) {
    case Segmentation::Threshold: return "threshold";
    case Segmentation::OnOff: return "onoff-hmm";
    case Segmentation::Duration: return "duration-hmm";
  }
  return "?";
}

const char* to_string(PostProcess p) {
  switch (p) {
    case PostProcess::None: return "none";
    case PostProcess::Order1: return "order1";
    case PostProcess::Order1Key: return "order1-key";
    case PostProcess::Order2: return "order2";
  }
  return "?";
}

void PipelineConfig::validate() const {
  system_spec(system);
  if (!(threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be >= 0");
  if (!(min_duration >= 0.0)) throw Error(ErrorCode::InvalidConfig, "min_dur must be >= 0");
  if (max_order < 1) throw Error(ErrorCode::InvalidConfig, "order must be >= 1");
  if (plca.n_iter < 1) throw Error(ErrorCode::InvalidConfig, "plca.n_iter must be >= 1");
  if (!(plca.tol >= 0.0)) throw Error(ErrorCode::InvalidConfig, "plca.tol must be >= 0");
  if (!(states.min_duration >= 0.0) || !(states.onset_window >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "state generation windows must be >= 0");
  }
  if (threads < 0) throw Error(ErrorCode::InvalidConfig, "threads must be >= 0");
  synth.validate();
  for (const auto& m : train_models) {
    if (!known_models().count(m)) throw Error(ErrorCode::InvalidConfig, "unknown model '" + m + "'");
  }
}

void to_json(json& j, const PipelineConfig& cfg) {
  j = {{"system", cfg.system},
       {"frontend", cfg.frontend},
       {"plca", cfg.plca},
       {"threshold", cfg.threshold},
       {"min_dur_ms", cfg.min_duration * 1000.0},
       {"order", cfg.max_order},
       {"calibrate_emissions", cfg.calibrate_emissions},
       {"pool_durations", cfg.pool_durations},
       {"states", {{"min_dur_ms", cfg.states.min_duration * 1000.0},
                   {"onset_window_ms", cfg.states.onset_window * 1000.0}}},
       {"train_models", cfg.train_models},
       {"threads", cfg.threads},
       {"synth", {{"n_sequences", cfg.synth.n_sequences},
                  {"polyphony", cfg.synth.polyphony},
                  {"seed", cfg.synth.seed},
                  {"sequence_seconds", cfg.synth.sequence_seconds},
                  {"test_fraction", cfg.synth.test_fraction},
                  {"sample_rate", cfg.synth.sample_rate},
                  {"note_seconds", cfg.synth.note_seconds},
                  {"key_pool", cfg.synth.key_pool}}}};
}

void from_json(const json& j, PipelineConfig& cfg) {
  static const std::set<std::string> top = {"system", "frontend", "plca", "threshold", "min_dur_ms",
                                            "order", "calibrate_emissions", "pool_durations",
                                            "states", "train_models", "threads", "synth"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!top.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config field '" + key + "'");
  }
  try {
    cfg.system = j.value("system", cfg.system);
    if (j.contains("frontend")) cfg.frontend = j.at("frontend").get<FrontendConfig>();
    if (j.contains("plca")) cfg.plca = j.at("plca").get<PlcaConfig>();
    cfg.threshold = j.value("threshold", cfg.threshold);
    cfg.min_duration = j.value("min_dur_ms", cfg.min_duration * 1000.0) / 1000.0;
    cfg.max_order = j.value("order", cfg.max_order);
    cfg.calibrate_emissions = j.value("calibrate_emissions", cfg.calibrate_emissions);
    cfg.pool_durations = j.value("pool_durations", cfg.pool_durations);
    if (j.contains("states")) {
      const auto& s = j.at("states");
      cfg.states.min_duration = s.value("min_dur_ms", cfg.states.min_duration * 1000.0) / 1000.0;
      cfg.states.onset_window = s.value("onset_window_ms", cfg.states.onset_window * 1000.0) / 1000.0;
    }
    cfg.train_models = j.value("train_models", cfg.train_models);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      auto& c = cfg.synth;
      c.n_sequences = s.value("n_sequences", c.n_sequences);
      c.polyphony = s.value("polyphony", c.polyphony);
      c.seed = s.value("seed", c.seed);
      c.sequence_seconds = s.value("sequence_seconds", c.sequence_seconds);
      c.test_fraction = s.value("test_fraction", c.test_fraction);
      c.sample_rate = s.value("sample_rate", c.sample_rate);
      c.note_seconds = s.value("note_seconds", c.note_seconds);
      c.key_pool = s.value("key_pool", c.key_pool);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
  }
}

PipelineConfig parse_config(const json& doc) {
  PipelineConfig cfg;
  if (!doc.is_null()) from_json(doc, cfg);
  cfg.validate();
  return cfg;
}

Analysis analyze(const AudioBuffer& audio, const TemplateBank& bank, const PipelineConfig& cfg) {
  if (!(bank.frontend == cfg.frontend)) {
    throw Error(ErrorCode::BankMismatch, "template bank was built with different frontend parameters");
  }
  Analysis a;
  a.spec = compute_spectrogram(audio, cfg.frontend);
  a.activations = run_plca(a.spec, bank, cfg.plca);
  a.normalized = normalize_salience(a.activations.salience);
  return a;
}

Transcription transcribe_analysis(const Analysis& analysis, const TemplateBank& bank,
                                  const ModelSet& models, const PipelineConfig& cfg) {
  const SystemSpec spec = system_spec(cfg.system);
  Transcription out;
  json timing = json::object();

  auto start = Clock::now();
  std::vector<NoteEvent> events = segment(analysis, bank, models, cfg, spec.segmentation);
  timing["segmentation"] = elapsed_ms(start);

  json counts = {{"segmented", events.size()}};
  json post = {{"kind", to_string(spec.post)}};
  if (spec.post == PostProcess::None) {
    out.notes = std::move(events);
  } else {
    start = Clock::now();
    const auto candidates =
        make_candidates(emission_input(analysis.normalized, cfg), bank.pitches, events, analysis.spec.hop);
    const StateSequence seq = generate_states(candidates, cfg.states);
    DecodeResult decoded;
    if (spec.post == PostProcess::Order1Key) {
      if (!models.keyed) throw Error(ErrorCode::InvalidConfig, "system m4k needs a key-conditioned model");
      const double energy = analysis.spec.frame_energy.sum();
      const Key key = energy > 0.0 ? detect_key(analysis.spec) : Key{};
      post["key"] = key.label();
      decoded = decode_sequence(seq, *models.keyed, key);
    } else {
      const auto& model = spec.post == PostProcess::Order1 ? models.order1 : models.order2;
      if (!model) {
        throw Error(ErrorCode::InvalidConfig,
                    "system " + cfg.system + " needs an order-" +
                        (spec.post == PostProcess::Order1 ? "1" : "2") + " transition model");
      }
      decoded = decode_sequence(seq, *model);
    }
    long replaced = 0;
    json replacements = json::array();
    for (size_t t = 0; t < decoded.path.size(); ++t) {
      const auto& state = decoded.inventory[size_t(decoded.path[t])];
      if (state == seq.clusters[t].pitches) continue;
      ++replaced;
      replacements.push_back({{"onset", seq.clusters[t].onset},
                              {"observed", seq.clusters[t].pitches},
                              {"observation", seq.clusters[t].observation},
                              {"decoded", state}});
    }
    post["replacements"] = replacements;
    counts["candidates"] = candidates.size();
    counts["clusters"] = seq.clusters.size();
    counts["mixture_states"] = seq.states.size();
    counts["model_states"] = decoded.inventory.size();
    counts["replaced_clusters"] = replaced;
    out.notes = std::move(decoded.notes);
    timing["post_processing"] = elapsed_ms(start);
  }
  counts["notes"] = out.notes.size();

  out.diagnostics = {{"system", spec.name},
                     {"components", {{"segmentation", to_string(spec.segmentation)},
                                     {"post_processing", to_string(spec.post)}}},
                     {"frames", analysis.spec.n_frames()},
                     {"hop_seconds", analysis.spec.hop},
                     {"plca_iterations", analysis.activations.iterations},
                     {"counts", counts},
                     {"post_processing", post},
                     {"timing_ms", timing}};
  return out;
}

Transcription transcribe_audio(const AudioBuffer& audio, const TemplateBank& bank,
                               const ModelSet& models, const PipelineConfig& cfg) {
  if (!(bank.frontend == cfg.frontend)) {
    throw Error(ErrorCode::BankMismatch, "template bank was built with different frontend parameters");
  }
  auto start = Clock::now();
  Analysis a;
  a.spec = compute_spectrogram(audio, cfg.frontend);
  const double frontend_ms = elapsed_ms(start);
  start = Clock::now();
  a.activations = run_plca(a.spec, bank, cfg.plca);
  a.normalized = normalize_salience(a.activations.salience);
  const double plca_ms = elapsed_ms(start);

  Transcription t = transcribe_analysis(a, bank, models, cfg);
  t.diagnostics["timing_ms"]["frontend"] = frontend_ms;
  t.diagnostics["timing_ms"]["plca"] = plca_ms;
  return t;
}

TemplateBank extract_templates(const std::filesystem::path& notes_dir, const PipelineConfig& cfg) {
  if (!std::filesystem::is_directory(notes_dir)) {
    throw Error(ErrorCode::UnreadableFile, "note library not found: " + notes_dir.string());
  }
  const auto files = files_with_extension(notes_dir, ".wav");
  if (files.empty()) throw Error(ErrorCode::EmptyLibrary, "no WAV files in " + notes_dir.string());

  std::map<std::pair<int, std::string>, Eigen::VectorXd> columns;
  std::set<int> pitches;
  std::set<std::string> modes;
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const auto sep = stem.find('_');
    int pitch = 0;
    try {
      size_t used = 0;
      pitch = std::stoi(stem.substr(0, sep), &used);
      if (used != stem.substr(0, sep).size()) throw std::invalid_argument(stem);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": expected <pitch>_<mode>.wav");
    }
    const std::string mode = sep == std::string::npos ? "default" : stem.substr(sep + 1);
    auto column = for_file(path, [&] {
      return extract_template(compute_spectrogram(load_audio(path), cfg.frontend));
    });
    columns[{pitch, mode}] = std::move(column);
    pitches.insert(pitch);
    modes.insert(mode);
    logger().debug("template {} ({} {})", path.filename().string(), pitch, mode);
  }

  TemplateBank bank;
  bank.pitches.assign(pitches.begin(), pitches.end());
  bank.modes.assign(modes.begin(), modes.end());
  bank.frontend = cfg.frontend;
  bank.bin_frequencies = cfg.frontend.bin_frequencies();
  bank.templates.resize(cfg.frontend.n_bins(), Eigen::Index(pitches.size() * modes.size()));
  for (int i = 0; i < bank.n_pitches(); ++i) {
    for (int m = 0; m < bank.n_modes(); ++m) {
      const auto it = columns.find({bank.pitches[size_t(i)], bank.modes[size_t(m)]});
      if (it == columns.end()) {
        throw Error(ErrorCode::InvalidArgument, "note library lacks pitch " +
                                                    std::to_string(bank.pitches[size_t(i)]) +
                                                    " in mode " + bank.modes[size_t(m)]);
      }
      bank.templates.col(bank.column(i, m)) = it->second;
    }
  }
  bank.validate();
  return bank;
}

std::vector<PitchSet> reference_mixtures(const ScoreTrack& track, const StateGenConfig& cfg) {
  const auto candidates = perfect_candidates(track.events);
  const StateSequence seq = generate_states(candidates, cfg);
  std::vector<PitchSet> out;
  out.reserve(seq.clusters.size());
  for (const auto& c : seq.clusters) out.push_back(c.pitches);
  return out;
}

ModelSet train_models(const std::filesystem::path& manifest_path, const PipelineConfig& cfg) {
  const CorpusManifest manifest = read_manifest(manifest_path);
  const auto root = manifest_path.parent_path();
  for (const auto& id : manifest.train) {
    if (std::find(manifest.test.begin(), manifest.test.end(), id) != manifest.test.end()) {
      throw Error(ErrorCode::SplitLeakage, "sequence " + id + " is in both the train and test split");
    }
  }
  if (manifest.train.empty()) throw Error(ErrorCode::EmptyTraining, "train split is empty");

  auto wants = [&](const char* name) {
    return std::find(cfg.train_models.begin(), cfg.train_models.end(), name) != cfg.train_models.end();
  };
  int pitch_lo = 21, pitch_hi = 108;
  if (manifest.raw.contains("instrument")) {
    pitch_lo = manifest.raw["instrument"].value("pitch_lo", pitch_lo);
    pitch_hi = manifest.raw["instrument"].value("pitch_hi", pitch_hi);
  }
  std::vector<int> pitches;
  for (int p = pitch_lo; p <= pitch_hi; ++p) pitches.push_back(p);

  std::vector<Eigen::MatrixXi> rolls;
  std::vector<std::vector<PitchSet>> mixtures;
  std::vector<Key> keys;
  const bool need_audio = wants("onoff") || wants("duration") || wants("key");
  for (const auto& id : manifest.train) {
    const auto midi = root / "seq" / (id + ".mid");
    const ScoreTrack track = for_file(midi, [&] { return read_midi(midi); });
    mixtures.push_back(reference_mixtures(track, cfg.states));
    if (!need_audio) continue;
    const auto wav = root / "seq" / (id + ".wav");
    const Spectrogram spec = for_file(wav, [&] { return compute_spectrogram(load_audio(wav), cfg.frontend); });
    rolls.push_back(sample_roll(track, spec.hop, spec.n_frames(), pitch_lo, pitch_hi));
    if (wants("key")) keys.push_back(for_file(wav, [&] { return detect_key(spec); }));
    logger().info("training sequence {}: {} notes, {} clusters", id, track.events.size(),
                  mixtures.back().size());
  }

  ModelSet models;
  models.provenance = manifest.train;
  if (wants("onoff")) models.on_off = train_on_off(rolls, pitches);
  if (wants("duration")) models.duration = train_duration(rolls, pitches, cfg.max_order, cfg.pool_durations);
  if (wants("order1")) {
    models.order1 = train_transitions(mixtures, 1);
    models.order1->provenance = manifest.train;
  }
  if (wants("order2")) {
    models.order2 = train_transitions(mixtures, 2);
    models.order2->provenance = manifest.train;
  }
  if (wants("key")) {
    models.keyed = train_key_conditioned(mixtures, keys);
    for (auto& m : models.keyed->models) m.provenance = manifest.train;
    for (const auto& k : keys) models.keys.push_back(k.label());
  }
  return models;
}

void transcribe_files(const std::filesystem::path& input, const TemplateBank& bank,
                      const ModelSet& models, const PipelineConfig& cfg,
                      const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> inputs;
  if (std::filesystem::is_directory(input)) {
    inputs = files_with_extension(input, ".wav");
    if (inputs.empty()) throw Error(ErrorCode::InvalidArgument, "no WAV files in " + input.string());
  } else {
    inputs.push_back(input);
  }
  if (!(bank.frontend == cfg.frontend)) {
    throw Error(ErrorCode::BankMismatch, "template bank was built with different frontend parameters");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());

  std::vector<std::exception_ptr> errors(inputs.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t k = next++; k < inputs.size(); k = next++) {
      const auto& path = inputs[k];
      try {
        for_file(path, [&] {
          const AudioBuffer audio = load_audio(path);
          Transcription t = transcribe_audio(audio, bank, models, cfg);
          t.diagnostics["input"] = path.filename().string();
          const auto stem = path.stem().string();
          write_midi(track_from_events(t.notes, audio.duration()), out_dir / (stem + ".mid"));
          write_json(t.diagnostics, out_dir / (stem + ".json"));
          logger().info("{}: {} notes", path.filename().string(), t.notes.size());
        });
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t n_workers = std::min<size_t>(inputs.size(), cfg.threads > 0 ? size_t(cfg.threads) : hw);
  {
    std::vector<std::jthread> pool;
    for (size_t w = 1; w < n_workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EvalReport evaluate_dirs(const std::filesystem::path& est_dir, const std::filesystem::path& ref_dir,
                         const std::string& system) {
  for (const auto& dir : {est_dir, ref_dir}) {
    if (!std::filesystem::is_directory(dir)) {
      throw Error(ErrorCode::UnreadableFile, "directory not found: " + dir.string());
    }
  }
  std::map<std::string, std::filesystem::path> est, ref;
  for (const auto& p : files_with_extension(est_dir, ".mid")) est[p.stem().string()] = p;
  for (const auto& p : files_with_extension(ref_dir, ".mid")) ref[p.stem().string()] = p;
  for (const auto& [stem, path] : est) {
    if (!ref.count(stem)) throw Error(ErrorCode::MissingPair, "no reference for " + path.string());
  }
  EvalReport report;
  report.system = system;
  for (const auto& [stem, ref_path] : ref) {
    const ScoreTrack r = for_file(ref_path, [&] { return read_midi(ref_path); });
    ScoreTrack e;
    if (const auto it = est.find(stem); it != est.end()) {
      e = for_file(it->second, [&] { return read_midi(it->second); });
    }
    report.add(stem, match_notes(e.events, r.events));
  }
  return report;
}

}  // namespace amt
