#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amt/score.hpp"
#include "amt/spectrogram.hpp"

namespace amt {

// Sorted, duplicate-free set of MIDI pitches. The empty set is silence.
using PitchSet = std::vector<int>;

struct ProbabilisticCandidate {
  int pitch = 0;
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds
  // Frame span [first_frame, end_frame) the likelihood was taken over.
  Eigen::Index first_frame = 0;
  Eigen::Index end_frame = 0;
  double likelihood = 0.0;
};

// Likelihood of each event = median of the normalized salience over its frames.
// Even-length intervals use the mean of the two central values.
std::vector<ProbabilisticCandidate> make_candidates(const Eigen::MatrixXd& normalized_salience,
                                                    std::span<const int> pitches,
                                                    std::span<const NoteEvent> events, double hop);

// Candidates with likelihood 1 built from reference notes (training input).
std::vector<ProbabilisticCandidate> perfect_candidates(std::span<const NoteEvent> events);

struct MixtureState {
  PitchSet pitches;
  int index = 0;
};

// One aligned group of candidates: a single step of the irregular sequence.
struct Cluster {
  PitchSet pitches;
  double onset = 0.0;
  double duration = 0.0;
  double observation = 0.0;
  int state = 0;
};

struct StateGenConfig {
  double min_duration = 0.050;
  double onset_window = 0.020;
};

struct StateSequence {
  std::vector<MixtureState> states;  // states[0] is silence
  std::vector<Cluster> clusters;

  std::vector<int> sequence() const;
  std::vector<double> observations() const;
};

// Prunes short candidates, groups onsets greedily (an onset closer than
// onset_window to the running cluster's median onset joins it), and gives each
// cluster the median member onset, the median member duration and the mean
// member likelihood.
StateSequence generate_states(std::span<const ProbabilisticCandidate> candidates,
                              const StateGenConfig& cfg = {});

// Candidates re-rendered from a state sequence; generate_states maps this back
// to the same sequence.
std::vector<ProbabilisticCandidate> to_candidates(const StateSequence& seq);

struct Key {
  int tonic = 0;  // pitch class, 0 = C
  bool minor = false;

  int index() const { return tonic + (minor ? 12 : 0); }
  static Key from_index(int index) { return {index % 12, index >= 12}; }
  std::string label() const;
  bool operator==(const Key&) const = default;
};

// N-gram counts over mixture states. Contexts are tuples of `order` state ids;
// sequences start from an all-silence context.
struct TransitionModel {
  int order = 1;
  std::vector<PitchSet> states;  // states[0] is silence
  std::map<std::vector<int>, std::map<int, int64_t>> counts;
  std::vector<std::string> provenance;

  int n_states() const { return int(states.size()); }
  int find(const PitchSet& pitches) const;
  // Returns the id of `pitches`, appending it if absent.
  int intern(const PitchSet& pitches);
  std::vector<int> start_context() const { return std::vector<int>(size_t(order), 0); }
};

TransitionModel make_transition_model(int order);

// Adds the n-gram counts of one sequence of pitch sets.
void accumulate_transitions(TransitionModel& model, std::span<const PitchSet> sequence);

TransitionModel train_transitions(std::span<const std::vector<PitchSet>> sequences, int order);

// Smoothed successor distribution over all model states for `context`:
// seen s -> count(s) / (n + T); each unseen -> T / (Z (n + T)); unseen
// context -> uniform.
Eigen::VectorXd witten_bell(const TransitionModel& model, std::span<const int> context);

struct KeyConditionedModel {
  std::array<TransitionModel, 24> models;
};

KeyConditionedModel train_key_conditioned(std::span<const std::vector<PitchSet>> sequences,
                                          std::span<const Key> keys);

// Pitch-class energy of the whole spectrogram.
std::array<double, 12> chroma(const Spectrogram& spec);

// Krumhansl-Schmuckler profile correlation over the 24 keys.
Key detect_key(const Spectrogram& spec);
Key key_from_chroma(const std::array<double, 12>& chroma);

struct DecodeResult {
  std::vector<int> path;           // state ids in `inventory`
  std::vector<PitchSet> inventory;  // model states plus unseen test mixtures
  std::vector<NoteEvent> notes;
  double log_score = 0.0;
};

// Re-decodes the cluster sequence with a first- or second-order model
// (order taken from the model). Emission of observation o in state s is o when
// s is the cluster's own mixture, (1 - o) / (N_c - 1) otherwise.
DecodeResult decode_sequence(const StateSequence& seq, const TransitionModel& model);
DecodeResult decode_sequence(const StateSequence& seq, const KeyConditionedModel& model, Key key);

}  // namespace amt
