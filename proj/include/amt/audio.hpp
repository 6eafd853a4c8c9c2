#pragma once

#include <filesystem>
#include <vector>

namespace amt {

// Mono audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads a PCM WAV file (8/16/24/32-bit integer). Multi-channel input is
// downmixed by averaging channels.
AudioBuffer load_audio(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples outside [-1, 1] are clamped.
void write_wav(const AudioBuffer& audio, const std::filesystem::path& path);

}  // namespace amt
