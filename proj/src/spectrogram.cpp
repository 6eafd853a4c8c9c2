#include "amt/spectrogram.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "amt/error.hpp"

namespace amt {
namespace {

// FFTW's planner is not reentrant; execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct RealFft {
  int size;
  std::unique_ptr<double, FftwFree> input;
  std::unique_ptr<fftw_complex, FftwFree> output;
  fftw_plan plan = nullptr;

  explicit RealFft(int n)
      : size(n),
        input(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        output(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, input.get(), output.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
};

struct FilterTap {
  int fft_bin;
  double weight;
};

// Triangular filters centred on the log-spaced bin frequencies. Each side is
// at least one FFT bin wide so that no filter falls between FFT bins.
std::vector<std::vector<FilterTap>> make_filterbank(const std::vector<double>& centers,
                                                    double bins_per_octave, int fft_size,
                                                    int sample_rate) {
  const double df = double(sample_rate) / fft_size;
  const double ratio = std::pow(2.0, 1.0 / bins_per_octave);
  const int n_fft_bins = fft_size / 2 + 1;
  std::vector<std::vector<FilterTap>> bank(centers.size());
  for (size_t k = 0; k < centers.size(); ++k) {
    const double fc = centers[k];
    const double lower = std::max(fc - fc / ratio, df);
    const double upper = std::max(fc * ratio - fc, df);
    const int j_lo = std::max(0, int(std::ceil((fc - lower) / df)));
    const int j_hi = std::min(n_fft_bins - 1, int(std::floor((fc + upper) / df)));
    for (int j = j_lo; j <= j_hi; ++j) {
      const double f = j * df;
      const double w = f <= fc ? 1.0 - (fc - f) / lower : 1.0 - (f - fc) / upper;
      if (w > 0.0) bank[k].push_back({j, w});
    }
  }
  return bank;
}

}  // namespace

double FrontendConfig::fmax() const { return fmin * std::pow(2.0, octaves); }

std::vector<double> FrontendConfig::bin_frequencies() const {
  std::vector<double> freqs(static_cast<size_t>(n_bins()));
  for (int k = 0; k < n_bins(); ++k) {
    freqs[size_t(k)] = fmin * std::pow(2.0, double(k) / bins_per_octave);
  }
  return freqs;
}

void FrontendConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw Error(ErrorCode::InvalidConfig, "sample rate must be positive");
  if (bins_per_octave < 12) throw Error(ErrorCode::InvalidConfig, "bins_per_octave must be >= 12");
  if (octaves < 1) throw Error(ErrorCode::InvalidConfig, "octaves must be >= 1");
  if (!(fmin > 0.0)) throw Error(ErrorCode::InvalidConfig, "fmin must be positive");
  if (fmax() > sample_rate / 2.0) {
    throw Error(ErrorCode::InvalidConfig, "fmax exceeds the Nyquist frequency");
  }
  if (!(hop_seconds > 0.0) || hop_seconds * sample_rate < 1.0) {
    throw Error(ErrorCode::InvalidConfig, "hop must be at least one sample");
  }
  if (!(window_seconds > 0.0) || window_seconds * sample_rate < 16.0) {
    throw Error(ErrorCode::InvalidConfig, "window too short");
  }
  if (!(magnitude_power > 0.0) || !std::isfinite(magnitude_power)) {
    throw Error(ErrorCode::InvalidConfig, "magnitude_power must be positive");
  }
}

Spectrogram compute_spectrogram(const AudioBuffer& audio, const FrontendConfig& cfg) {
  cfg.validate(audio.sample_rate);
  if (audio.samples.empty()) throw Error(ErrorCode::EmptyAudio, "audio buffer is empty");

  const int sr = audio.sample_rate;
  const int window = int(std::lround(cfg.window_seconds * sr));
  int fft_size = 1;
  while (fft_size < window) fft_size <<= 1;

  std::vector<double> hann(static_cast<size_t>(window));
  for (int n = 0; n < window; ++n) {
    hann[size_t(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window);
  }

  Spectrogram spec;
  spec.hop = cfg.hop_seconds;
  spec.bin_frequencies = cfg.bin_frequencies();
  const auto filters = make_filterbank(spec.bin_frequencies, cfg.bins_per_octave, fft_size, sr);

  const auto n_samples = int64_t(audio.samples.size());
  const double hop_samples = cfg.hop_seconds * sr;
  const auto n_frames = int64_t(std::floor(double(n_samples - 1) / hop_samples)) + 1;
  const auto n_bins = Eigen::Index(filters.size());

  spec.magnitudes = Eigen::MatrixXd::Zero(n_bins, n_frames);
  spec.frame_energy = Eigen::VectorXd::Zero(n_frames);

  RealFft fft(fft_size);
  std::vector<double> mag(static_cast<size_t>(fft_size / 2 + 1));
  double* in = fft.input.get();

  for (int64_t t = 0; t < n_frames; ++t) {
    const int64_t start = std::llround(double(t) * hop_samples) - window / 2;
    std::fill(in, in + fft_size, 0.0);
    bool any = false;
    for (int n = 0; n < window; ++n) {
      const int64_t idx = start + n;
      if (idx < 0 || idx >= n_samples) continue;
      const double v = audio.samples[size_t(idx)];
      if (v != 0.0) any = true;
      in[n] = v * hann[size_t(n)];
    }
    if (!any) continue;

    fftw_execute_dft_r2c(fft.plan, in, fft.output.get());
    const fftw_complex* out = fft.output.get();
    for (size_t j = 0; j < mag.size(); ++j) {
      const double m = std::hypot(out[j][0], out[j][1]);
      mag[j] = cfg.magnitude_power == 1.0 ? m : std::pow(m, cfg.magnitude_power);
    }

    double energy = 0.0;
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      double v = 0.0;
      for (const auto& tap : filters[size_t(k)]) v += tap.weight * mag[size_t(tap.fft_bin)];
      spec.magnitudes(k, t) = v;
      energy += v;
    }
    spec.frame_energy(t) = energy;
    if (energy > 0.0) {
      spec.magnitudes.col(t) /= energy;
    }
  }
  return spec;
}

void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out) {
  out << std::setprecision(17);
  out << "# hop_seconds=" << spec.hop << " bin_frequencies=";
  for (size_t k = 0; k < spec.bin_frequencies.size(); ++k) {
    if (k) out << ';';
    out << spec.bin_frequencies[k];
  }
  out << '\n';
  for (Eigen::Index f = 0; f < spec.n_bins(); ++f) {
    for (Eigen::Index t = 0; t < spec.n_frames(); ++t) {
      if (t) out << ',';
      out << spec.magnitudes(f, t);
    }
    out << '\n';
  }
}

void write_spectrogram_csv(const Spectrogram& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_spectrogram_csv(spec, out);
}

}  // namespace amt
