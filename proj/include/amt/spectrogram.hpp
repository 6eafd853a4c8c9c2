#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "amt/audio.hpp"

namespace amt {

// Parameters of the STFT + triangular log-frequency filterbank.
struct FrontendConfig {
  int bins_per_octave = 60;
  double fmin = 27.5;
  int octaves = 7;
  double hop_seconds = 0.010;
  // Window length in seconds; 4096 samples at 44.1 kHz.
  double window_seconds = 4096.0 / 44100.0;
  // STFT magnitudes are raised to this power before binning (2 = power spectrum).
  double magnitude_power = 2.0;

  double fmax() const;
  int n_bins() const { return bins_per_octave * octaves; }
  std::vector<double> bin_frequencies() const;

  // Throws InvalidConfig when the parameters cannot be realised at this rate.
  void validate(int sample_rate) const;

  bool operator==(const FrontendConfig&) const = default;
};

// Column-normalized magnitude spectrogram. magnitudes(f, t) holds P(f|t) for
// every frame with non-zero energy; silent frames are all-zero columns.
// frame_energy(t) is the column sum before normalization, i.e. P(t) up to scale.
struct Spectrogram {
  Eigen::MatrixXd magnitudes;
  std::vector<double> bin_frequencies;
  Eigen::VectorXd frame_energy;
  double hop = 0.0;

  Eigen::Index n_bins() const { return magnitudes.rows(); }
  Eigen::Index n_frames() const { return magnitudes.cols(); }
};

// Frame t is centred on sample t * hop; the signal is zero-padded at both ends.
Spectrogram compute_spectrogram(const AudioBuffer& audio, const FrontendConfig& cfg);

// CSV dump: one header line "# hop_seconds=<h> bin_frequencies=<f0>;<f1>;...",
// then one row per bin with one value per frame.
void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out);
void write_spectrogram_csv(const Spectrogram& spec, const std::filesystem::path& path);

}  // namespace amt
