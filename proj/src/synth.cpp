#include "amt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "amt/error.hpp"
#include "amt/harmonic.hpp"
#include "amt/json_io.hpp"
#include "amt/log.hpp"

namespace amt {
namespace {

// Portable uniform draws from the raw engine output; std distributions are
// implementation-defined and would make corpora differ across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return std::min(n - 1, int(uniform() * n)); }
  int weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = uniform() * total;
    for (size_t k = 0; k < weights.size(); ++k) {
      if (x < weights[k]) return int(k);
      x -= weights[k];
    }
    return int(weights.size()) - 1;
  }

 private:
  std::mt19937_64 engine_;
};

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};
constexpr std::array<int, 7> kMinorScale = {0, 2, 3, 5, 7, 8, 10};

// Degree-to-degree weights of a plain diatonic progression (I..vii).
const std::vector<std::vector<double>> kProgression = {
    {0.5, 1.0, 0.5, 3.0, 3.0, 2.0, 0.3},  // I
    {0.5, 0.2, 0.2, 0.5, 3.0, 0.5, 1.0},  // ii
    {0.5, 0.3, 0.2, 1.0, 0.5, 2.5, 0.2},  // iii
    {2.0, 1.5, 0.3, 0.2, 3.0, 0.5, 0.5},  // IV
    {4.0, 0.3, 0.3, 0.5, 0.3, 2.0, 0.3},  // V
    {1.0, 2.5, 0.5, 2.0, 1.0, 0.2, 0.2},  // vi
    {3.0, 0.2, 0.8, 0.3, 0.5, 0.5, 0.1},  // vii
};

constexpr double kVoicingFloor = 52.0;
constexpr double kRestrikeGap = 0.2;

}  // namespace

int SynthInstrument::velocity_of_mode(int mode) const {
  const int n = n_modes();
  if (n <= 1) return 100;
  return 40 + (80 * std::clamp(mode, 0, n - 1)) / (n - 1);
}

int SynthInstrument::mode_of_velocity(int velocity) const {
  int best = 0;
  for (int m = 1; m < n_modes(); ++m) {
    if (std::abs(velocity_of_mode(m) - velocity) < std::abs(velocity_of_mode(best) - velocity)) best = m;
  }
  return best;
}

SynthInstrument default_instrument() {
  SynthInstrument instr;
  for (int p = instr.pitch_lo; p <= instr.pitch_hi; ++p) {
    std::array<double, kPartials> a{};
    const double tilt = 0.9 + 0.02 * (p - instr.pitch_lo);
    double total = 0.0;
    for (int k = 1; k <= kPartials; ++k) {
      const double colour = 1.0 + 0.3 * std::cos(0.9 * k + 0.37 * p);
      a[size_t(k - 1)] = colour / std::pow(double(k), tilt);
      total += a[size_t(k - 1)];
    }
    for (auto& v : a) v /= total;
    instr.amplitudes.push_back(a);
  }
  return instr;
}

double midi_to_hz(double pitch) { return 440.0 * std::pow(2.0, (pitch - 69.0) / 12.0); }

AudioBuffer render_note(const SynthInstrument& instr, int pitch, int mode, double duration,
                        int sample_rate) {
  if (!instr.contains(pitch)) {
    throw Error(ErrorCode::OutOfRange, "pitch " + std::to_string(pitch) + " outside instrument range");
  }
  if (mode < 0 || mode >= instr.n_modes()) throw Error(ErrorCode::OutOfRange, "mode out of range");
  if (!(duration > 0.0) || sample_rate <= 0) {
    throw Error(ErrorCode::OutOfRange, "duration and sample rate must be positive");
  }

  AudioBuffer out;
  out.sample_rate = sample_rate;
  const double sr = sample_rate;
  const auto n_sustain = size_t(std::llround(duration * sr));
  const auto n_release = size_t(std::llround(instr.release * sr));
  out.samples.assign(n_sustain + n_release, 0.0);

  const double f0 = midi_to_hz(pitch);
  const auto& amps = instr.amplitudes[size_t(pitch - instr.pitch_lo)];
  const double gain = instr.mode_gains[size_t(mode)];
  for (int k = 1; k <= kPartials; ++k) {
    const double fk = f0 * k * std::sqrt(1.0 + instr.inharmonicity * k * k);
    if (fk >= sr / 2.0) break;
    const double amp = amps[size_t(k - 1)] * gain;
    const std::complex<double> step = std::polar(1.0, 2.0 * std::numbers::pi * fk / sr);
    std::complex<double> phasor(1.0, 0.0);
    for (size_t n = 0; n < out.samples.size(); ++n) {
      out.samples[n] += amp * phasor.imag();
      phasor *= step;
    }
  }

  const double decay_step = std::exp(-instr.decay_rate / sr);
  const auto n_attack = size_t(std::max(1.0, std::round(instr.attack * sr)));
  double env = 1.0;
  for (size_t n = 0; n < out.samples.size(); ++n) {
    double shape = env;
    if (n < n_attack) shape *= double(n) / double(n_attack);
    if (n >= n_sustain) shape *= 1.0 - double(n - n_sustain + 1) / double(n_release + 1);
    out.samples[n] *= shape;
    env *= decay_step;
  }
  return out;
}

AudioBuffer render_sequence(const SynthInstrument& instr, const ScoreTrack& track, int sample_rate) {
  double end = track.duration;
  for (const auto& e : track.events) end = std::max(end, e.offset + instr.release);
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(size_t(std::ceil(end * sample_rate)), 0.0);

  for (const auto& e : track.events) {
    const auto note = render_note(instr, e.pitch, instr.mode_of_velocity(e.velocity), e.duration(),
                                  sample_rate);
    const auto start = size_t(std::llround(e.onset * sample_rate));
    if (start + note.samples.size() > out.samples.size()) {
      out.samples.resize(start + note.samples.size(), 0.0);
    }
    for (size_t n = 0; n < note.samples.size(); ++n) out.samples[start + n] += note.samples[n];
  }

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0) {
    for (double& s : out.samples) s /= peak;
  }
  return out;
}

void CorpusConfig::validate() const {
  if (n_sequences < 2) throw Error(ErrorCode::InvalidConfig, "at least two sequences are required");
  if (polyphony < 1) throw Error(ErrorCode::InvalidConfig, "polyphony must be >= 1");
  if (!(sequence_seconds >= 3.0)) throw Error(ErrorCode::InvalidConfig, "sequences must last >= 3 s");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "test_fraction must lie in (0, 1)");
  }
  if (sample_rate < 8000) throw Error(ErrorCode::InvalidConfig, "sample rate too low");
  if (key_pool.empty()) throw Error(ErrorCode::InvalidConfig, "key pool is empty");
  for (int k : key_pool) {
    if (k < 0 || k >= 24) throw Error(ErrorCode::InvalidConfig, "key index out of range");
  }
}

ScoreTrack compose_sequence(const SynthInstrument& instr, const CorpusConfig& cfg, int index,
                            int* key_index) {
  Rng rng(mix_seed(cfg.seed, uint64_t(index)));
  const int key = cfg.key_pool[size_t(rng.below(int(cfg.key_pool.size())))];
  if (key_index) *key_index = key;
  const int tonic = key % 12;
  const auto& scale = key >= 12 ? kMinorScale : kMajorScale;

  auto chord_tones = [&](int degree) {
    std::vector<int> tones;
    // Root voiced at or above the voicing floor; third and fifth stacked above.
    const int root_pc = (tonic + scale[size_t(degree)]) % 12;
    int root = int(kVoicingFloor);
    while (((root % 12) + 12) % 12 != root_pc) ++root;
    tones.push_back(root);
    for (int step : {2, 4}) {
      const int d = degree + step;
      const int pc = (tonic + scale[size_t(d % 7)]) % 12;
      int p = tones.back() + 1;
      while (((p % 12) + 12) % 12 != pc) ++p;
      tones.push_back(p);
    }
    std::vector<int> in_range;
    for (int p : tones) {
      if (instr.contains(p)) in_range.push_back(p);
    }
    return in_range;
  };

  std::vector<NoteEvent> events;
  const double last_offset = cfg.sequence_seconds - 0.5;
  double onset = 0.5;
  int degree = 0;
  while (onset < last_offset - 0.1) {
    // Notes still sounding (or released too recently to restrike) at this onset.
    int sounding = 0;
    std::vector<int> busy;
    for (const auto& e : events) {
      if (e.offset > onset) ++sounding;
      if (e.offset + kRestrikeGap > onset) busy.push_back(e.pitch);
    }
    const int room = cfg.polyphony - sounding;
    if (room <= 0) {
      double earliest = last_offset;
      for (const auto& e : events) {
        if (e.offset > onset) earliest = std::min(earliest, e.offset);
      }
      onset = earliest + 0.05;
      continue;
    }

    std::vector<int> tones;
    for (int p : chord_tones(degree)) {
      if (std::find(busy.begin(), busy.end(), p) == busy.end()) tones.push_back(p);
    }
    if (tones.empty()) {
      onset += 0.1;
      continue;
    }
    const int count = std::min<int>(room, int(tones.size()));
    // Drop tones at random until `count` remain.
    while (int(tones.size()) > count) tones.erase(tones.begin() + rng.below(int(tones.size())));

    const int mode = rng.below(instr.n_modes());
    const double length = rng.uniform(0.1, 1.5);
    for (int p : tones) {
      NoteEvent e;
      e.pitch = p;
      e.onset = onset;
      e.offset = std::min(onset + length, last_offset);
      e.velocity = instr.velocity_of_mode(mode);
      events.push_back(e);
    }

    degree = rng.weighted(kProgression[size_t(degree)]);
    onset += length + rng.uniform(0.05, 0.3);
  }
  for (auto& e : events) {
    // Quantize to MIDI ticks (120 BPM, 480 per quarter) so the rendered audio
    // and the written score agree exactly.
    e.onset = std::round(e.onset * 960.0) / 960.0;
    e.offset = std::round(e.offset * 960.0) / 960.0;
  }
  return track_from_events(std::move(events), cfg.sequence_seconds);
}

nlohmann::json instrument_to_json(const SynthInstrument& instr) {
  return {{"pitch_lo", instr.pitch_lo},
          {"pitch_hi", instr.pitch_hi},
          {"amplitudes", instr.amplitudes},
          {"mode_gains", instr.mode_gains},
          {"mode_names", instr.mode_names},
          {"decay_rate", instr.decay_rate},
          {"inharmonicity", instr.inharmonicity},
          {"attack", instr.attack},
          {"release", instr.release}};
}

CorpusManifest make_corpus(const SynthInstrument& instr, const CorpusConfig& cfg,
                           const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "notes", ec);
  fs::create_directories(out_dir / "seq", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create corpus directories under " + out_dir.string());

  for (int p = instr.pitch_lo; p <= instr.pitch_hi; ++p) {
    for (int m = 0; m < instr.n_modes(); ++m) {
      const auto audio = render_note(instr, p, m, cfg.note_seconds, cfg.sample_rate);
      write_wav(audio, out_dir / "notes" / (std::to_string(p) + "_" + instr.mode_names[size_t(m)] + ".wav"));
    }
  }

  CorpusManifest manifest;
  manifest.seed = cfg.seed;
  std::vector<std::string> ids;
  nlohmann::json sequences = nlohmann::json::array();
  for (int i = 0; i < cfg.n_sequences; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "seq%03d", i);
    ids.emplace_back(id);
    int key = 0;
    const auto track = compose_sequence(instr, cfg, i, &key);
    write_midi(track, out_dir / "seq" / (ids.back() + ".mid"));
    write_wav(render_sequence(instr, track, cfg.sample_rate), out_dir / "seq" / (ids.back() + ".wav"));
    manifest.keys.push_back(Key{key % 12, key >= 12}.label());
    sequences.push_back({{"id", ids.back()}, {"key", manifest.keys.back()}, {"notes", track.events.size()}});
    logger().info("rendered {} ({} notes)", ids.back(), track.events.size());
  }

  // Seeded split: a Fisher-Yates shuffle picks the test ids.
  Rng rng(mix_seed(cfg.seed, 0xfeedULL));
  std::vector<std::string> shuffled = ids;
  for (size_t k = shuffled.size() - 1; k > 0; --k) {
    std::swap(shuffled[k], shuffled[size_t(rng.below(int(k + 1)))]);
  }
  const auto n_test = size_t(std::max<long>(1, std::lround(cfg.test_fraction * cfg.n_sequences)));
  manifest.test.assign(shuffled.begin(), shuffled.begin() + long(n_test));
  manifest.train.assign(shuffled.begin() + long(n_test), shuffled.end());
  std::sort(manifest.test.begin(), manifest.test.end());
  std::sort(manifest.train.begin(), manifest.train.end());

  manifest.raw = {{"seed", cfg.seed},
                  {"n_sequences", cfg.n_sequences},
                  {"polyphony", cfg.polyphony},
                  {"sequence_seconds", cfg.sequence_seconds},
                  {"sample_rate", cfg.sample_rate},
                  {"split", {{"train", manifest.train}, {"test", manifest.test}}},
                  {"sequences", sequences},
                  {"instrument", instrument_to_json(instr)}};
  write_json(manifest.raw, out_dir / "manifest.json");
  return manifest;
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  CorpusManifest m;
  m.raw = read_json(path);
  try {
    m.train = m.raw.at("split").at("train").get<std::vector<std::string>>();
    m.test = m.raw.at("split").at("test").get<std::vector<std::string>>();
    m.seed = m.raw.value("seed", uint64_t(0));
    if (m.raw.contains("sequences")) {
      for (const auto& s : m.raw.at("sequences")) m.keys.push_back(s.value("key", std::string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace amt
