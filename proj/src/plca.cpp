#include "amt/plca.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "amt/error.hpp"
#include "amt/json_io.hpp"
#include "amt/log.hpp"

namespace amt {
namespace {

constexpr double kTiny = 1e-300;

std::vector<Eigen::Index> active_frames(const Eigen::VectorXd& energy) {
  std::vector<Eigen::Index> frames;
  for (Eigen::Index t = 0; t < energy.size(); ++t) {
    if (energy(t) > 0.0) frames.push_back(t);
  }
  return frames;
}

double log_likelihood(const Eigen::MatrixXd& v, const Eigen::MatrixXd& model) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < v.cols(); ++t) {
    for (Eigen::Index f = 0; f < v.rows(); ++f) {
      const double x = v(f, t);
      if (x > 0.0) total += x * std::log(std::max(model(f, t), kTiny));
    }
  }
  return total;
}

// Floors a distribution block and renormalises it to unit sum.
template <typename Block>
void floor_and_normalise(Block&& block, double floor) {
  block = block.cwiseMax(floor);
  block /= block.sum();
}

std::string csv_name(int pitch, const std::string& mode) {
  return std::to_string(pitch) + "_" + mode + ".csv";
}

}  // namespace

void TemplateBank::validate() const {
  if (pitches.empty() || modes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "template bank has no pitches or modes");
  }
  if (templates.cols() != Eigen::Index(pitches.size() * modes.size())) {
    throw Error(ErrorCode::InvalidArgument, "template bank column count mismatch");
  }
  for (size_t i = 1; i < pitches.size(); ++i) {
    if (pitches[i] <= pitches[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "template bank pitches must be strictly increasing");
    }
  }
  if ((templates.array() < 0.0).any() || !templates.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "template bank has negative or non-finite entries");
  }
  for (Eigen::Index k = 0; k < templates.cols(); ++k) {
    if (std::abs(templates.col(k).sum() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "template column does not sum to 1");
    }
  }
}

Eigen::VectorXd extract_template(const Spectrogram& note_sample) {
  const double total = note_sample.frame_energy.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::AllSilent, "note sample has no energy");
  Eigen::VectorXd tmpl = note_sample.magnitudes * note_sample.frame_energy;
  return tmpl / tmpl.sum();
}

ActivationTensor run_plca(const Spectrogram& spec, const TemplateBank& bank, const PlcaConfig& cfg) {
  if (spec.n_bins() != bank.n_bins()) {
    throw Error(ErrorCode::DimensionMismatch,
                "spectrogram has " + std::to_string(spec.n_bins()) + " bins, bank has " +
                    std::to_string(bank.n_bins()));
  }
  if (cfg.n_iter < 1) throw Error(ErrorCode::InvalidConfig, "n_iter must be >= 1");

  const int n_pitches = bank.n_pitches();
  const int n_modes = bank.n_modes();
  const Eigen::Index n_components = bank.templates.cols();
  const Eigen::Index n_frames = spec.n_frames();

  ActivationTensor act;
  act.n_modes = n_modes;
  act.frame_energy = spec.frame_energy;
  act.pitch_activation = Eigen::MatrixXd::Zero(n_pitches, n_frames);
  act.mode_activation = Eigen::MatrixXd::Zero(n_components, n_frames);
  act.salience = Eigen::MatrixXd::Zero(n_pitches, n_frames);

  const auto frames = active_frames(spec.frame_energy);
  if (frames.empty()) return act;
  const auto n_active = Eigen::Index(frames.size());

  Eigen::MatrixXd v(spec.n_bins(), n_active);
  for (Eigen::Index c = 0; c < n_active; ++c) v.col(c) = spec.magnitudes.col(frames[size_t(c)]);

  // weights(k, t) = P(i|t) P(m|i,t) for component k = (i, m).
  Eigen::MatrixXd pitch = Eigen::MatrixXd::Constant(n_pitches, n_active, 1.0 / n_pitches);
  Eigen::MatrixXd mode = Eigen::MatrixXd::Constant(n_components, n_active, 1.0 / n_modes);
  Eigen::MatrixXd weights(n_components, n_active);
  auto combine = [&] {
    for (int i = 0; i < n_pitches; ++i) {
      for (int m = 0; m < n_modes; ++m) {
        const auto k = bank.column(i, m);
        weights.row(k) = mode.row(k).cwiseProduct(pitch.row(i));
      }
    }
  };
  combine();

  Eigen::MatrixXd model = bank.templates * weights;
  double ll = log_likelihood(v, model);
  act.log_likelihood.push_back(ll);

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    // E-step folded into the multiplicative update: posterior mass of each
    // component summed over bins.
    Eigen::MatrixXd ratio = v.cwiseQuotient(model.cwiseMax(kTiny));
    Eigen::MatrixXd mass = weights.cwiseProduct(bank.templates.transpose() * ratio);

    for (Eigen::Index t = 0; t < n_active; ++t) {
      for (int i = 0; i < n_pitches; ++i) {
        auto block = mass.col(t).segment(bank.column(i, 0), n_modes);
        pitch(i, t) = block.sum();
        if (pitch(i, t) > 0.0) {
          mode.col(t).segment(bank.column(i, 0), n_modes) = block / pitch(i, t);
        } else {
          mode.col(t).segment(bank.column(i, 0), n_modes).setConstant(1.0 / n_modes);
        }
        floor_and_normalise(mode.col(t).segment(bank.column(i, 0), n_modes), cfg.floor);
      }
      floor_and_normalise(pitch.col(t), cfg.floor);
    }
    combine();

    model.noalias() = bank.templates * weights;
    const double next = log_likelihood(v, model);
    act.log_likelihood.push_back(next);
    act.iterations = iter + 1;
    const double gain = next - ll;
    ll = next;
    if (std::abs(gain) < cfg.tol * std::abs(ll)) break;
  }
  logger().debug("plca: {} iterations, log-likelihood {:.6f}", act.iterations, ll);

  const double total_energy = spec.frame_energy.sum();
  for (Eigen::Index c = 0; c < n_active; ++c) {
    const Eigen::Index t = frames[size_t(c)];
    act.pitch_activation.col(t) = pitch.col(c);
    act.mode_activation.col(t) = mode.col(c);
    act.salience.col(t) = pitch.col(c) * (spec.frame_energy(t) / total_energy);
  }
  return act;
}

Eigen::VectorXd frame_log_likelihood(const Spectrogram& spec, const TemplateBank& bank,
                                     const ActivationTensor& act) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.n_frames());
  Eigen::VectorXd weights(bank.templates.cols());
  for (Eigen::Index t = 0; t < spec.n_frames(); ++t) {
    if (!(spec.frame_energy(t) > 0.0)) continue;
    for (int i = 0; i < bank.n_pitches(); ++i) {
      for (int m = 0; m < bank.n_modes(); ++m) {
        weights(bank.column(i, m)) = act.pitch_activation(i, t) * act.mode(m, i, t);
      }
    }
    const Eigen::VectorXd model = bank.templates * weights;
    double ll = 0.0;
    for (Eigen::Index f = 0; f < spec.n_bins(); ++f) {
      const double x = spec.magnitudes(f, t);
      if (x > 0.0) ll += x * std::log(std::max(model(f), kTiny));
    }
    out(t) = ll;
  }
  return out;
}

void save_bank(const TemplateBank& bank, const std::filesystem::path& dir) {
  bank.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());

  nlohmann::json files = nlohmann::json::array();
  for (int i = 0; i < bank.n_pitches(); ++i) {
    for (int m = 0; m < bank.n_modes(); ++m) {
      const auto name = csv_name(bank.pitches[size_t(i)], bank.modes[size_t(m)]);
      std::ofstream out(dir / name);
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (dir / name).string());
      out << std::setprecision(17);
      for (size_t f = 0; f < bank.bin_frequencies.size(); ++f) {
        out << (f ? "," : "") << bank.bin_frequencies[f];
      }
      out << '\n';
      const auto col = bank.templates.col(bank.column(i, m));
      for (Eigen::Index f = 0; f < col.size(); ++f) out << (f ? "," : "") << col(f);
      out << '\n';
      files.push_back({{"pitch", bank.pitches[size_t(i)]}, {"mode", bank.modes[size_t(m)]}, {"file", name}});
    }
  }
  nlohmann::json manifest = {
      {"pitches", bank.pitches},
      {"modes", bank.modes},
      {"frontend", bank.frontend},
      {"n_bins", bank.n_bins()},
      {"files", files},
  };
  write_json(manifest, dir / "manifest.json");
}

TemplateBank load_bank(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  TemplateBank bank;
  try {
    bank.pitches = manifest.at("pitches").get<std::vector<int>>();
    bank.modes = manifest.at("modes").get<std::vector<std::string>>();
    bank.frontend = manifest.at("frontend").get<FrontendConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, (dir / "manifest.json").string() + ": " + e.what());
  }
  bank.bin_frequencies = bank.frontend.bin_frequencies();
  const auto n_bins = Eigen::Index(bank.bin_frequencies.size());
  bank.templates = Eigen::MatrixXd::Zero(n_bins, Eigen::Index(bank.pitches.size() * bank.modes.size()));

  for (int i = 0; i < bank.n_pitches(); ++i) {
    for (int m = 0; m < bank.n_modes(); ++m) {
      const auto path = dir / csv_name(bank.pitches[size_t(i)], bank.modes[size_t(m)]);
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
      std::string header, values;
      std::getline(in, header);
      std::getline(in, values);
      std::stringstream ss(values);
      std::string cell;
      Eigen::Index f = 0;
      while (std::getline(ss, cell, ',')) {
        if (f >= n_bins) throw Error(ErrorCode::MalformedFile, path.string() + ": too many values");
        bank.templates(f++, bank.column(i, m)) = std::stod(cell);
      }
      if (f != n_bins) throw Error(ErrorCode::MalformedFile, path.string() + ": wrong number of bins");
    }
  }
  bank.validate();
  return bank;
}

}  // namespace amt
