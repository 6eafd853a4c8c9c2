#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "amt/score.hpp"

namespace amt {

inline constexpr double kEmissionFloor = 1e-6;

// Frame-wise note activity decisions; 0 = off, 1 = on.
using StatePath = std::vector<uint8_t>;

// Two-state on/off chain for one pitch. transition(from, to), 0 = off, 1 = on.
struct OnOffHmm {
  double prior_on = 0.0;
  Eigen::Matrix2d transition = Eigen::Matrix2d::Constant(0.5);
  Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();  // raw transition counts
};

// On/off chain whose self-transition depends on how long the current state has
// lasted. stay(i, d - 1) is the probability of remaining in state i after d
// frames, d = 1..max_order; the last column covers every stay >= max_order.
struct DurationHmm {
  int max_order = 1;
  Eigen::MatrixXd stay;
  // survival(i, d - 1) = C(i, d): visits to state i that lasted at least d frames.
  Eigen::Matrix<int64_t, 2, Eigen::Dynamic> survival;
  // C(i, O_d+): visits that lasted more than max_order frames.
  Eigen::Matrix<int64_t, 2, 1> beyond = Eigen::Matrix<int64_t, 2, 1>::Zero();
};

// Per-pitch models; entry k belongs to pitches[k].
template <typename Model>
struct PitchModels {
  std::vector<int> pitches;
  std::vector<Model> models;

  const Model& for_pitch(int pitch) const;
};

using OnOffModels = PitchModels<OnOffHmm>;
using DurationModels = PitchModels<DurationHmm>;

// Divides by the global maximum so every value lies in [0, 1].
Eigen::MatrixXd normalize_salience(const Eigen::MatrixXd& salience);

// Maps normalized salience s to the pseudo-posterior s / (s + threshold), so the
// on/off decision boundary of the emission model sits at the detection threshold.
Eigen::MatrixXd salience_to_posterior(const Eigen::MatrixXd& normalized, double threshold);

// Row k of `salience` belongs to pitches[k]. Runs of frames with salience
// strictly above `threshold` become events [start * hop, end * hop); runs
// shorter than min_duration are discarded.
std::vector<NoteEvent> threshold_segment(const Eigen::MatrixXd& salience,
                                         std::span<const int> pitches, double threshold,
                                         double min_duration, double hop);

// Maximal on-runs of `path` as events, pruned like threshold_segment.
std::vector<NoteEvent> path_to_events(const StatePath& path, int pitch, double hop,
                                      double min_duration = 0.0);

// Each roll has one row per entry of `pitches` and one column per frame.
// Transitions use add-one smoothing; the on prior is 0.
OnOffModels train_on_off(std::span<const Eigen::MatrixXi> rolls, std::span<const int> pitches);

// Run-length survival counts per pitch. With pool_pitches every pitch receives
// the counts accumulated over all pitches. Undefined ratios default to 0.5.
DurationModels train_duration(std::span<const Eigen::MatrixXi> rolls, std::span<const int> pitches,
                              int max_order, bool pool_pitches = false);

// Rebuilds ã from the stored counts.
void estimate_stay_probabilities(DurationHmm& hmm);

// ã(off, 1) = a(off, off), ã(on, 1) = a(on, on): the first-order model as a
// duration model of order 1.
DurationHmm duration_from_on_off(const OnOffHmm& hmm);

// Emission log-probabilities for one frame: {log b(off, y), log b(on, y)}.
std::pair<double, double> on_off_log_emission(double y);

StatePath viterbi_on_off(std::span<const double> salience, const OnOffHmm& hmm);

struct DurationDecodeOptions {
  // The path must end in the off state.
  bool require_final_off = true;
};

// Viterbi over the (state, stay) grid. The first frame is off; entering a
// state resets its stay to 1; staying advances it up to max_order.
StatePath viterbi_duration(std::span<const double> salience, const DurationHmm& hmm,
                           const DurationDecodeOptions& options = {});

}  // namespace amt
