#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "amt/audio.hpp"
#include "amt/score.hpp"

namespace amt {

inline constexpr int kPartials = 12;

// Additive decaying-string instrument.
struct SynthInstrument {
  int pitch_lo = 48;
  int pitch_hi = 84;
  // amplitudes[p - pitch_lo][k]: partial k + 1 of pitch p, summing to 1 per pitch.
  std::vector<std::array<double, kPartials>> amplitudes;
  std::vector<double> mode_gains = {0.4, 0.7, 1.0};
  std::vector<std::string> mode_names = {"soft", "medium", "loud"};
  double decay_rate = 1.5;       // 1/s
  double inharmonicity = 1e-4;   // B in f_k = k f0 sqrt(1 + B k^2)
  double attack = 0.005;         // seconds, linear
  double release = 0.010;        // seconds, linear fade after the offset

  int n_modes() const { return int(mode_gains.size()); }
  bool contains(int pitch) const { return pitch >= pitch_lo && pitch <= pitch_hi; }
  // Velocity written to MIDI for mode m, and the mode read back from a velocity.
  int velocity_of_mode(int mode) const;
  int mode_of_velocity(int velocity) const;
};

// Deterministic default instrument: spectral envelope falling with partial
// number, with a mild pitch-dependent tilt.
SynthInstrument default_instrument();

double midi_to_hz(double pitch);

// Renders `duration` seconds of sustain plus the release tail.
AudioBuffer render_note(const SynthInstrument& instr, int pitch, int mode, double duration,
                        int sample_rate);

// Notes summed at their onsets, scaled by 1/peak only when the peak exceeds 1.
// Output length covers max(track.duration, last offset + release).
AudioBuffer render_sequence(const SynthInstrument& instr, const ScoreTrack& track, int sample_rate);

struct CorpusConfig {
  int n_sequences = 10;
  int polyphony = 3;
  uint64_t seed = 1;
  double sequence_seconds = 30.0;
  double test_fraction = 0.3;
  int sample_rate = 44100;
  double note_seconds = 1.0;  // isolated note sample length
  // Keys are drawn from this pool (index = tonic + 12 * minor).
  std::vector<int> key_pool = {0, 7, 5, 21};

  void validate() const;
};

struct CorpusManifest {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<std::string> keys;  // per sequence, in id order
  uint64_t seed = 0;
  nlohmann::json raw;
};

// Writes notes/<pitch>_<mode>.wav, seq/<id>.wav, seq/<id>.mid and manifest.json.
CorpusManifest make_corpus(const SynthInstrument& instr, const CorpusConfig& cfg,
                           const std::filesystem::path& out_dir);

// Generates the score of sequence `index` without rendering audio.
ScoreTrack compose_sequence(const SynthInstrument& instr, const CorpusConfig& cfg, int index,
                            int* key_index = nullptr);

CorpusManifest read_manifest(const std::filesystem::path& path);

nlohmann::json instrument_to_json(const SynthInstrument& instr);

}  // namespace amt
