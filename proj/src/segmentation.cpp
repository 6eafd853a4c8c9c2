#include "amt/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "amt/error.hpp"
#include "amt/viterbi.hpp"

namespace amt {
namespace {

constexpr double kDurationSlack = 1e-9;

// Calls fn(state, start, length) for each maximal run of a roll row.
template <typename Row, typename Fn>
void for_each_run(const Row& row, Fn&& fn) {
  const Eigen::Index n = row.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && (row(end) != 0) == (row(start) != 0)) ++end;
    fn(row(start) != 0 ? 1 : 0, start, end - start);
    start = end;
  }
}

void check_rolls(std::span<const Eigen::MatrixXi> rolls, std::span<const int> pitches) {
  bool any_frames = false;
  for (const auto& roll : rolls) {
    if (roll.rows() != Eigen::Index(pitches.size())) {
      throw Error(ErrorCode::DimensionMismatch, "roll row count does not match pitch list");
    }
    any_frames = any_frames || roll.cols() > 0;
  }
  if (!any_frames || pitches.empty()) throw Error(ErrorCode::EmptyTraining, "no training frames");
}

double clamp_unit(double y) { return std::isnan(y) ? 0.0 : std::clamp(y, 0.0, 1.0); }

}  // namespace

template <typename Model>
const Model& PitchModels<Model>::for_pitch(int pitch) const {
  const auto it = std::lower_bound(pitches.begin(), pitches.end(), pitch);
  if (it == pitches.end() || *it != pitch) {
    throw Error(ErrorCode::OutOfRange, "no model for pitch " + std::to_string(pitch));
  }
  return models[size_t(it - pitches.begin())];
}

template struct PitchModels<OnOffHmm>;
template struct PitchModels<DurationHmm>;

Eigen::MatrixXd normalize_salience(const Eigen::MatrixXd& salience) {
  if (salience.size() == 0) return salience;
  const double peak = salience.maxCoeff();
  if (!(peak > 0.0)) return Eigen::MatrixXd::Zero(salience.rows(), salience.cols());
  return salience / peak;
}

Eigen::MatrixXd salience_to_posterior(const Eigen::MatrixXd& normalized, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be positive");
  return normalized.unaryExpr([threshold](double s) {
    s = std::max(s, 0.0);
    return s / (s + threshold);
  });
}

std::vector<NoteEvent> path_to_events(const StatePath& path, int pitch, double hop,
                                      double min_duration) {
  std::vector<NoteEvent> events;
  const Eigen::Index n = Eigen::Index(path.size());
  Eigen::Index t = 0;
  while (t < n) {
    if (!path[size_t(t)]) {
      ++t;
      continue;
    }
    Eigen::Index end = t;
    while (end < n && path[size_t(end)]) ++end;
    if (double(end - t) * hop + kDurationSlack >= min_duration) {
      NoteEvent e;
      e.pitch = pitch;
      e.onset = double(t) * hop;
      e.offset = double(end) * hop;
      events.push_back(e);
    }
    t = end;
  }
  return events;
}

std::vector<NoteEvent> threshold_segment(const Eigen::MatrixXd& salience,
                                         std::span<const int> pitches, double threshold,
                                         double min_duration, double hop) {
  if (threshold < 0.0 || min_duration < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "threshold and min_duration must be non-negative");
  }
  if (salience.rows() != Eigen::Index(pitches.size())) {
    throw Error(ErrorCode::DimensionMismatch, "salience rows do not match pitch list");
  }
  std::vector<NoteEvent> events;
  StatePath path(size_t(salience.cols()));
  for (Eigen::Index i = 0; i < salience.rows(); ++i) {
    for (Eigen::Index t = 0; t < salience.cols(); ++t) path[size_t(t)] = salience(i, t) > threshold;
    auto row_events = path_to_events(path, pitches[size_t(i)], hop, min_duration);
    events.insert(events.end(), row_events.begin(), row_events.end());
  }
  return events;
}

OnOffModels train_on_off(std::span<const Eigen::MatrixXi> rolls, std::span<const int> pitches) {
  check_rolls(rolls, pitches);
  OnOffModels out;
  out.pitches.assign(pitches.begin(), pitches.end());
  out.models.resize(pitches.size());
  for (size_t i = 0; i < pitches.size(); ++i) {
    OnOffHmm& hmm = out.models[i];
    for (const auto& roll : rolls) {
      for (Eigen::Index t = 1; t < roll.cols(); ++t) {
        hmm.counts(roll(Eigen::Index(i), t - 1) != 0, roll(Eigen::Index(i), t) != 0) += 1.0;
      }
    }
    for (int from = 0; from < 2; ++from) {
      const double total = hmm.counts.row(from).sum() + 2.0;
      hmm.transition(from, from) = (hmm.counts(from, from) + 1.0) / total;
      hmm.transition(from, 1 - from) = 1.0 - hmm.transition(from, from);
    }
    hmm.prior_on = 0.0;
  }
  return out;
}

void estimate_stay_probabilities(DurationHmm& hmm) {
  const int order = hmm.max_order;
  hmm.stay.resize(2, order);
  for (int i = 0; i < 2; ++i) {
    for (int d = 1; d <= order; ++d) {
      const int64_t denom = hmm.survival(i, d - 1);
      const int64_t numer = d < order ? hmm.survival(i, d) : hmm.beyond(i);
      hmm.stay(i, d - 1) = denom > 0 ? double(numer) / double(denom) : 0.5;
    }
  }
}

DurationModels train_duration(std::span<const Eigen::MatrixXi> rolls, std::span<const int> pitches,
                              int max_order, bool pool_pitches) {
  if (max_order < 1) throw Error(ErrorCode::InvalidConfig, "duration order must be >= 1");
  check_rolls(rolls, pitches);

  DurationModels out;
  out.pitches.assign(pitches.begin(), pitches.end());
  out.models.resize(pitches.size());
  for (auto& hmm : out.models) {
    hmm.max_order = max_order;
    hmm.survival = Eigen::Matrix<int64_t, 2, Eigen::Dynamic>::Zero(2, max_order);
    hmm.beyond.setZero();
  }

  for (size_t i = 0; i < pitches.size(); ++i) {
    DurationHmm& hmm = out.models[i];
    for (const auto& roll : rolls) {
      for_each_run(roll.row(Eigen::Index(i)), [&](int state, Eigen::Index, Eigen::Index length) {
        const auto reached = std::min<Eigen::Index>(length, max_order);
        for (Eigen::Index d = 0; d < reached; ++d) hmm.survival(state, d) += 1;
        if (length > max_order) hmm.beyond(state) += 1;
      });
    }
  }

  if (pool_pitches) {
    DurationHmm pooled = out.models.front();
    for (size_t i = 1; i < out.models.size(); ++i) {
      pooled.survival += out.models[i].survival;
      pooled.beyond += out.models[i].beyond;
    }
    for (auto& hmm : out.models) hmm = pooled;
  }
  for (auto& hmm : out.models) estimate_stay_probabilities(hmm);
  return out;
}

DurationHmm duration_from_on_off(const OnOffHmm& hmm) {
  DurationHmm d;
  d.max_order = 1;
  d.stay.resize(2, 1);
  d.stay(0, 0) = hmm.transition(0, 0);
  d.stay(1, 0) = hmm.transition(1, 1);
  d.survival = Eigen::Matrix<int64_t, 2, Eigen::Dynamic>::Zero(2, 1);
  return d;
}

std::pair<double, double> on_off_log_emission(double y) {
  y = clamp_unit(y);
  return {std::log(std::max(1.0 - y, kEmissionFloor)), std::log(std::max(y, kEmissionFloor))};
}

StatePath viterbi_on_off(std::span<const double> salience, const OnOffHmm& hmm) {
  const auto n = Eigen::Index(salience.size());
  StatePath path(salience.size(), 0);
  if (n == 0) return path;

  Eigen::Vector2d log_init(std::log(1.0 - hmm.prior_on), std::log(hmm.prior_on));
  Eigen::Matrix2d log_trans = hmm.transition.array().log();
  Eigen::MatrixXd log_emit(2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto [off, on] = on_off_log_emission(salience[size_t(t)]);
    log_emit(0, t) = off;
    log_emit(1, t) = on;
  }
  const auto best = viterbi(log_init, log_trans, log_emit);
  for (size_t t = 0; t < path.size(); ++t) path[t] = uint8_t(best.states[t]);
  return path;
}

StatePath viterbi_duration(std::span<const double> salience, const DurationHmm& hmm,
                           const DurationDecodeOptions& options) {
  const int order = hmm.max_order;
  if (order < 1 || hmm.stay.rows() != 2 || hmm.stay.cols() != order) {
    throw Error(ErrorCode::InvalidArgument, "malformed duration model");
  }
  const auto n = Eigen::Index(salience.size());
  StatePath path(salience.size(), 0);
  if (n == 0) return path;

  // Cell index = state * order + (stay - 1); lower index wins ties, which
  // prefers off and then the shorter stay.
  const int n_cells = 2 * order;
  auto cell = [order](int state, int stay) { return state * order + stay - 1; };

  Eigen::MatrixXd log_stay(2, order), log_leave(2, order);
  for (int i = 0; i < 2; ++i) {
    for (int d = 0; d < order; ++d) {
      log_stay(i, d) = std::log(hmm.stay(i, d));
      log_leave(i, d) = std::log(1.0 - hmm.stay(i, d));
    }
  }

  Eigen::VectorXd delta = Eigen::VectorXd::Constant(n_cells, kLogZero);
  Eigen::VectorXd next(n_cells);
  Eigen::MatrixXi back = Eigen::MatrixXi::Zero(n_cells, n);

  delta(cell(0, 1)) = 0.0 + on_off_log_emission(salience[0]).first;

  for (Eigen::Index t = 1; t < n; ++t) {
    const auto [emit_off, emit_on] = on_off_log_emission(salience[size_t(t)]);
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const double emit = i == 0 ? emit_off : emit_on;
      for (int d = 1; d <= order; ++d) {
        // Predecessor candidates, visited in increasing cell index.
        double best = kLogZero;
        int arg = 0;
        auto consider = [&](int from, double score) {
          if (score > best) {
            best = score;
            arg = from;
          }
        };
        auto consider_entries = [&] {
          for (int tau = 1; tau <= order; ++tau) {
            consider(cell(j, tau), delta(cell(j, tau)) + log_leave(j, tau - 1));
          }
        };
        auto consider_stays = [&] {
          if (d >= 2) consider(cell(i, d - 1), delta(cell(i, d - 1)) + log_stay(i, d - 2));
          if (d == order) consider(cell(i, d), delta(cell(i, d)) + log_stay(i, d - 1));
        };
        if (d == 1) {
          if (i == 0) {
            if (order == 1) consider_stays();
            consider_entries();
          } else {
            consider_entries();
            if (order == 1) consider_stays();
          }
        } else {
          consider_stays();
        }
        next(cell(i, d)) = best + emit;
        back(cell(i, d), t) = arg;
      }
    }
    delta.swap(next);
  }

  double best = kLogZero;
  int last = 0;
  const int end_cells = options.require_final_off ? order : n_cells;
  for (int c = 0; c < end_cells; ++c) {
    if (delta(c) > best) {
      best = delta(c);
      last = c;
    }
  }

  int current = last;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    path[size_t(t)] = uint8_t(current / order);
    if (t > 0) current = back(current, t);
  }
  return path;
}

}  // namespace amt
