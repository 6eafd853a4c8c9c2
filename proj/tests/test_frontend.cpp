// Log-frequency spectrogram, template extraction and fixed-template EM.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "amt/error.hpp"
#include "amt/plca.hpp"
#include "amt/spectrogram.hpp"
#include "amt/synth.hpp"

namespace {

amt::AudioBuffer tone(double hz, double seconds, int rate = 44100) {
  amt::AudioBuffer a;
  a.sample_rate = rate;
  a.samples.resize(size_t(seconds * rate));
  for (size_t n = 0; n < a.samples.size(); ++n) {
    a.samples[n] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * double(n) / rate);
  }
  return a;
}

// Spectrogram with the given columns already normalized.
amt::Spectrogram make_spec(const Eigen::MatrixXd& columns, const Eigen::VectorXd& energy) {
  amt::Spectrogram s;
  s.magnitudes = columns;
  s.frame_energy = energy;
  s.hop = 0.01;
  s.bin_frequencies.resize(size_t(columns.rows()));
  for (Eigen::Index f = 0; f < columns.rows(); ++f) s.bin_frequencies[size_t(f)] = 100.0 + double(f);
  return s;
}

Eigen::MatrixXd random_stochastic(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng) * u(rng);
  for (Eigen::Index c = 0; c < cols; ++c) m.col(c) /= m.col(c).sum();
  return m;
}

amt::TemplateBank make_bank(const Eigen::MatrixXd& templates, int n_pitches, int n_modes) {
  amt::TemplateBank b;
  b.templates = templates;
  for (int i = 0; i < n_pitches; ++i) b.pitches.push_back(40 + i);
  for (int m = 0; m < n_modes; ++m) b.modes.push_back("m" + std::to_string(m));
  return b;
}

TEST(Spectrogram, ToneLandsInNearestBin) {
  const amt::FrontendConfig cfg;
  const auto spec = amt::compute_spectrogram(tone(440.0, 1.0), cfg);
  const Eigen::VectorXd mean = spec.magnitudes.rowwise().mean();
  Eigen::Index peak = 0;
  mean.maxCoeff(&peak);
  const auto freqs = cfg.bin_frequencies();
  size_t nearest = 0;
  for (size_t f = 0; f < freqs.size(); ++f) {
    if (std::abs(std::log(freqs[f] / 440.0)) < std::abs(std::log(freqs[nearest] / 440.0))) nearest = f;
  }
  EXPECT_EQ(size_t(peak), nearest);
}

TEST(Spectrogram, GeometryAndFrameCount) {
  const amt::FrontendConfig cfg;
  EXPECT_EQ(cfg.n_bins(), 420);
  const auto freqs = cfg.bin_frequencies();
  EXPECT_DOUBLE_EQ(freqs.front(), 27.5);
  EXPECT_NEAR(freqs[60], 55.0, 1e-9);
  const auto spec = amt::compute_spectrogram(tone(220.0, 0.5), cfg);
  EXPECT_EQ(spec.n_bins(), 420);
  EXPECT_EQ(spec.n_frames(), 50);
  EXPECT_DOUBLE_EQ(spec.hop, 0.01);
}

TEST(Spectrogram, ColumnsAreStochasticOrSilent) {
  auto audio = tone(330.0, 0.6);
  for (size_t n = 0; n < 8000; ++n) audio.samples[n] = 0.0;
  for (size_t n = audio.samples.size() - 10000; n < audio.samples.size(); ++n) audio.samples[n] = 0.0;
  const auto spec = amt::compute_spectrogram(audio, amt::FrontendConfig{});
  int silent = 0;
  for (Eigen::Index t = 0; t < spec.n_frames(); ++t) {
    const double sum = spec.magnitudes.col(t).sum();
    if (spec.frame_energy(t) > 0.0) {
      EXPECT_NEAR(sum, 1.0, 1e-9);
    } else {
      EXPECT_EQ(sum, 0.0);
      ++silent;
    }
    EXPECT_TRUE((spec.magnitudes.col(t).array() >= 0.0).all());
  }
  EXPECT_GT(spec.frame_energy.maxCoeff(), 0.0);
}

TEST(Spectrogram, SilenceIsAllZero) {
  amt::AudioBuffer a;
  a.sample_rate = 44100;
  a.samples.assign(22050, 0.0);
  const auto spec = amt::compute_spectrogram(a, amt::FrontendConfig{});
  EXPECT_TRUE(spec.frame_energy.isZero());
  EXPECT_TRUE(spec.magnitudes.isZero());
}

TEST(Spectrogram, EmptyAudioThrows) {
  amt::AudioBuffer a;
  a.sample_rate = 44100;
  try {
    amt::compute_spectrogram(a, amt::FrontendConfig{});
    FAIL();
  } catch (const amt::Error& e) {
    EXPECT_EQ(e.code(), amt::ErrorCode::EmptyAudio);
  }
}

TEST(Spectrogram, UnrealisableConfigThrows) {
  amt::FrontendConfig cfg;
  cfg.octaves = 12;  // top bin above Nyquist
  try {
    amt::compute_spectrogram(tone(440.0, 0.2), cfg);
    FAIL();
  } catch (const amt::Error& e) {
    EXPECT_EQ(e.code(), amt::ErrorCode::InvalidConfig);
  }
}

TEST(Spectrogram, CsvHeaderAndShape) {
  const auto spec = amt::compute_spectrogram(tone(440.0, 0.1), amt::FrontendConfig{});
  std::ostringstream out;
  amt::write_spectrogram_csv(spec, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# hop_seconds=", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), spec.n_frames() - 1);
  }
  EXPECT_EQ(rows, spec.n_bins());
}

TEST(Template, ConstantColumnsGiveThatColumn) {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd v = random_stochastic(30, 1, rng).col(0);
  Eigen::MatrixXd cols(30, 5);
  for (int t = 0; t < 5; ++t) cols.col(t) = v;
  const auto tmpl = amt::extract_template(make_spec(cols, Eigen::VectorXd::LinSpaced(5, 1.0, 3.0)));
  EXPECT_TRUE(tmpl.isApprox(v, 1e-12));
}

TEST(Template, EqualEnergyTwoFramesAverage) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd cols = random_stochastic(20, 2, rng);
  const auto tmpl = amt::extract_template(make_spec(cols, Eigen::VectorXd::Constant(2, 4.0)));
  const Eigen::VectorXd want = (cols.col(0) + cols.col(1)) / 2.0;
  EXPECT_TRUE(tmpl.isApprox(want / want.sum(), 1e-12));
}

TEST(Template, SilentSampleThrows) {
  try {
    amt::extract_template(make_spec(Eigen::MatrixXd::Zero(10, 3), Eigen::VectorXd::Zero(3)));
    FAIL();
  } catch (const amt::Error& e) {
    EXPECT_EQ(e.code(), amt::ErrorCode::AllSilent);
  }
}

TEST(Plca, GeneratingComponentDominates) {
  // Templates of the synthetic instrument, one per pitch and mode.
  const auto instr = amt::default_instrument();
  const amt::FrontendConfig fe;
  const int n_pitches = 8;
  amt::TemplateBank bank = make_bank(Eigen::MatrixXd(fe.n_bins(), n_pitches * instr.n_modes()), n_pitches,
                                     instr.n_modes());
  for (int i = 0; i < n_pitches; ++i) {
    for (int m = 0; m < instr.n_modes(); ++m) {
      const auto note = amt::compute_spectrogram(amt::render_note(instr, 60 + i, m, 0.3, 44100), fe);
      bank.templates.col(bank.column(i, m)) = amt::extract_template(note);
    }
  }
  Eigen::MatrixXd cols(fe.n_bins(), 10);
  for (int t = 0; t < 10; ++t) cols.col(t) = bank.templates.col(bank.column(5, 1));
  amt::PlcaConfig cfg;
  cfg.n_iter = 30;
  cfg.tol = 0.0;
  const auto act = amt::run_plca(make_spec(cols, Eigen::VectorXd::Ones(10)), bank, cfg);
  for (int t = 0; t < 10; ++t) EXPECT_GE(act.pitch_activation(5, t), 0.99);
}

TEST(Plca, GeneratingComponentDominatesOverlappingTemplates) {
  // Dense random templates overlap heavily, so EM needs many more iterations.
  std::mt19937_64 rng(3);
  const int n_pitches = 8, n_modes = 2;
  const auto bank = make_bank(random_stochastic(60, n_pitches * n_modes, rng), n_pitches, n_modes);
  Eigen::MatrixXd cols(60, 10);
  for (int t = 0; t < 10; ++t) cols.col(t) = bank.templates.col(bank.column(5, 1));
  amt::PlcaConfig cfg;
  cfg.n_iter = 1000;
  cfg.tol = 0.0;
  const auto act = amt::run_plca(make_spec(cols, Eigen::VectorXd::Ones(10)), bank, cfg);
  for (int t = 0; t < 10; ++t) EXPECT_GE(act.pitch_activation(5, t), 0.99);
}

TEST(Plca, SingleComponentIsCertain) {
  std::mt19937_64 rng(4);
  const auto bank = make_bank(random_stochastic(25, 1, rng), 1, 1);
  const auto act = amt::run_plca(make_spec(random_stochastic(25, 7, rng), Eigen::VectorXd::Ones(7)), bank);
  for (int t = 0; t < 7; ++t) EXPECT_DOUBLE_EQ(act.pitch_activation(0, t), 1.0);
}

TEST(Plca, DisjointSupportsSplitEvenly) {
  Eigen::MatrixXd templates = Eigen::MatrixXd::Zero(20, 2);
  templates.block(0, 0, 10, 1).setConstant(0.1);
  templates.block(10, 1, 10, 1).setConstant(0.1);
  const auto bank = make_bank(templates, 2, 1);
  Eigen::MatrixXd cols = (templates.col(0) + templates.col(1)) / 2.0;
  const auto act = amt::run_plca(make_spec(cols, Eigen::VectorXd::Ones(1)), bank);
  EXPECT_NEAR(act.pitch_activation(0, 0), 0.5, 1e-3);
  EXPECT_NEAR(act.pitch_activation(1, 0), 0.5, 1e-3);
}

TEST(Plca, LikelihoodNeverDecreasesAndDistributionsNormalize) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_pitches = 2 + int(rng() % 6), n_modes = 1 + int(rng() % 3);
    const auto bank = make_bank(random_stochastic(40, n_pitches * n_modes, rng), n_pitches, n_modes);
    Eigen::VectorXd energy = Eigen::VectorXd::Random(12).cwiseAbs();
    energy(3) = 0.0;
    Eigen::MatrixXd cols = random_stochastic(40, 12, rng);
    cols.col(3).setZero();
    amt::PlcaConfig cfg;
    cfg.n_iter = 40;
    cfg.tol = 0.0;
    const auto act = amt::run_plca(make_spec(cols, energy), bank, cfg);
    ASSERT_EQ(act.log_likelihood.size(), 41u);
    for (size_t k = 1; k < act.log_likelihood.size(); ++k) {
      EXPECT_GE(act.log_likelihood[k], act.log_likelihood[k - 1] - 1e-9);
    }
    for (Eigen::Index t = 0; t < 12; ++t) {
      if (t == 3) {
        EXPECT_TRUE(act.pitch_activation.col(t).isZero());
        continue;
      }
      EXPECT_NEAR(act.pitch_activation.col(t).sum(), 1.0, 1e-8);
      for (int i = 0; i < n_pitches; ++i) {
        double modes = 0.0;
        for (int m = 0; m < n_modes; ++m) modes += act.mode(m, i, t);
        EXPECT_NEAR(modes, 1.0, 1e-8);
      }
    }
    EXPECT_NEAR(act.salience.sum(), 1.0, 1e-8);
  }
}

TEST(Plca, BinMismatchThrows) {
  std::mt19937_64 rng(6);
  const auto bank = make_bank(random_stochastic(10, 2, rng), 2, 1);
  try {
    amt::run_plca(make_spec(random_stochastic(11, 2, rng), Eigen::VectorXd::Ones(2)), bank);
    FAIL();
  } catch (const amt::Error& e) {
    EXPECT_EQ(e.code(), amt::ErrorCode::DimensionMismatch);
  }
}

TEST(Bank, ValidateRejectsBadBanks) {
  std::mt19937_64 rng(7);
  auto bank = make_bank(random_stochastic(10, 4, rng), 2, 2);
  EXPECT_NO_THROW(bank.validate());
  auto unsorted = bank;
  unsorted.pitches = {41, 40};
  EXPECT_THROW(unsorted.validate(), amt::Error);
  auto unnormalized = bank;
  unnormalized.templates(0, 0) += 0.5;
  EXPECT_THROW(unnormalized.validate(), amt::Error);
}

}  // namespace
