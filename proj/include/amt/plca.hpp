#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "amt/spectrogram.hpp"

namespace amt {

// Fixed spectral dictionary P(f|i,m). Column i * n_modes() + m of `templates`
// is the template of pitch index i in playing mode m.
struct TemplateBank {
  Eigen::MatrixXd templates;
  std::vector<int> pitches;       // MIDI note numbers, strictly increasing
  std::vector<std::string> modes;  // dynamics labels
  std::vector<double> bin_frequencies;
  FrontendConfig frontend;

  Eigen::Index n_bins() const { return templates.rows(); }
  int n_pitches() const { return int(pitches.size()); }
  int n_modes() const { return int(modes.size()); }
  Eigen::Index column(int pitch_index, int mode) const {
    return Eigen::Index(pitch_index) * n_modes() + mode;
  }

  // Throws InvalidArgument if any bank invariant is violated.
  void validate() const;
};

struct PlcaConfig {
  int n_iter = 50;
  // Relative improvement of the total log-likelihood below which EM stops.
  double tol = 1e-6;
  // Floor applied to every activation distribution before renormalising.
  double floor = 1e-12;
};

// Output of the fixed-template EM. Silent frames have all-zero activations.
struct ActivationTensor {
  Eigen::MatrixXd pitch_activation;  // (i, t): P(i|t)
  Eigen::MatrixXd mode_activation;   // (i * M + m, t): P(m|i,t)
  Eigen::VectorXd frame_energy;      // copied from the spectrogram
  Eigen::MatrixXd salience;          // (i, t): P(i|t) P(t), P(t) = energy / total energy
  // Total log-likelihood sum_t sum_f V(f,t) log(model(f,t)) before the first
  // update and after every iteration.
  std::vector<double> log_likelihood;
  int n_modes = 1;
  int iterations = 0;

  double mode(int m, int i, Eigen::Index t) const {
    return mode_activation(Eigen::Index(i) * n_modes + m, t);
  }
};

// Rank-1 PLCA of an isolated note: the energy-weighted mean of its normalized
// frames, which is the single-component EM fixed point.
Eigen::VectorXd extract_template(const Spectrogram& note_sample);

ActivationTensor run_plca(const Spectrogram& spec, const TemplateBank& bank,
                          const PlcaConfig& cfg = {});

// Per-frame log-likelihood of `spec` under the given activations.
Eigen::VectorXd frame_log_likelihood(const Spectrogram& spec, const TemplateBank& bank,
                                     const ActivationTensor& act);

// Directory layout: manifest.json plus one "<pitch>_<mode>.csv" per template.
// Each CSV holds a header line of bin frequencies and one line of values.
void save_bank(const TemplateBank& bank, const std::filesystem::path& dir);
TemplateBank load_bank(const std::filesystem::path& dir);

}  // namespace amt
