#include "amt/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amt/error.hpp"
#include "amt/viterbi.hpp"

namespace amt {
namespace {

constexpr double kTimeSlack = 1e-9;

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct ContextStats {
  int64_t total = 0;
  int64_t distinct = 0;
};

ContextStats stats_of(const std::map<int, int64_t>& successors) {
  ContextStats s;
  for (const auto& [state, count] : successors) {
    s.total += count;
    s.distinct += count > 0 ? 1 : 0;
  }
  return s;
}

// Witten-Bell probability of one seen successor.
double seen_probability(int64_t count, const ContextStats& s, int n_states) {
  if (s.distinct == n_states) return double(count) / double(s.total);
  return double(count) / double(s.total + s.distinct);
}

// Witten-Bell probability of each unseen successor.
double unseen_probability(const ContextStats& s, int n_states) {
  const int64_t unseen = n_states - s.distinct;
  if (unseen <= 0) return 0.0;
  return double(s.distinct) / (double(unseen) * double(s.total + s.distinct));
}

const std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                              2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
const std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                              2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

double correlation(const std::array<double, 12>& x, const std::array<double, 12>& profile, int shift) {
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < 12; ++k) {
    mx += x[size_t(k)];
    my += profile[size_t(k)];
  }
  mx /= 12.0;
  my /= 12.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int k = 0; k < 12; ++k) {
    const double dx = x[size_t((k + shift) % 12)] - mx;
    const double dy = profile[size_t(k)] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Model extended with the test mixtures, plus the cluster state ids in it.
struct Union {
  TransitionModel model;
  std::vector<int> cluster_states;
};

Union union_with(const StateSequence& seq, const TransitionModel& model) {
  Union u{model, {}};
  u.cluster_states.reserve(seq.clusters.size());
  for (const auto& c : seq.clusters) {
    if (c.state < 0 || size_t(c.state) >= seq.states.size() ||
        seq.states[size_t(c.state)].pitches != c.pitches) {
      throw Error(ErrorCode::ModelStateMismatch, "cluster refers to an unknown mixture state");
    }
    u.cluster_states.push_back(u.model.intern(c.pitches));
  }
  return u;
}

Eigen::MatrixXd emission_matrix(const StateSequence& seq, const Union& u) {
  const int n = u.model.n_states();
  const auto steps = Eigen::Index(seq.clusters.size());
  Eigen::MatrixXd log_emit(n, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const double o = std::clamp(seq.clusters[size_t(t)].observation, 0.0, 1.0);
    const double other = n > 1 ? std::log((1.0 - o) / double(n - 1)) : kLogZero;
    log_emit.col(t).setConstant(other);
    log_emit(u.cluster_states[size_t(t)], t) = std::log(o);
  }
  return log_emit;
}

std::vector<NoteEvent> render_path(const StateSequence& seq, const std::vector<PitchSet>& inventory,
                                   const std::vector<int>& path) {
  std::vector<NoteEvent> notes;
  for (size_t t = 0; t < path.size(); ++t) {
    const auto& c = seq.clusters[t];
    for (int pitch : inventory[size_t(path[t])]) {
      NoteEvent e;
      e.pitch = pitch;
      e.onset = c.onset;
      e.offset = c.onset + c.duration;
      e.likelihood = c.observation;
      notes.push_back(e);
    }
  }
  std::stable_sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return std::tie(a.onset, a.pitch) < std::tie(b.onset, b.pitch);
  });
  return notes;
}

std::vector<int> decode_first_order(const Union& u, const Eigen::MatrixXd& log_emit, double& score) {
  const int n = u.model.n_states();
  Eigen::MatrixXd log_trans(n, n);
  for (int k = 0; k < n; ++k) {
    const std::vector<int> ctx{k};
    log_trans.row(k) = witten_bell(u.model, ctx).array().log().transpose();
  }
  const Eigen::VectorXd log_init = witten_bell(u.model, u.model.start_context()).array().log();
  auto best = viterbi(log_init, log_trans, log_emit);
  score = best.log_score;
  return best.states;
}

std::vector<int> decode_second_order(const Union& u, const Eigen::MatrixXd& log_emit, double& score) {
  const int n = u.model.n_states();
  const auto steps = log_emit.cols();

  // Per-context log-probabilities: a default for unseen successors and sparse
  // overrides for seen ones. Unseen contexts are uniform.
  const double uniform = std::log(1.0 / double(n));
  Eigen::MatrixXd fallback = Eigen::MatrixXd::Constant(n, n, uniform);
  std::vector<std::vector<std::pair<int, double>>> overrides(size_t(n) * size_t(n));
  for (const auto& [ctx, successors] : u.model.counts) {
    const auto s = stats_of(successors);
    if (s.total == 0) continue;
    fallback(ctx[0], ctx[1]) = std::log(unseen_probability(s, n));
    auto& list = overrides[size_t(ctx[0]) * size_t(n) + size_t(ctx[1])];
    for (const auto& [next, count] : successors) {
      if (count > 0) list.emplace_back(next, std::log(seen_probability(count, s, n)));
    }
  }

  // delta(a, b): best score of a path whose last two states are a then b.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Constant(n, n, kLogZero);
  Eigen::MatrixXd next(n, n);
  std::vector<Eigen::MatrixXi> back(static_cast<size_t>(steps));
  {
    const std::vector<int> start = u.model.start_context();
    const Eigen::VectorXd first = witten_bell(u.model, start).array().log();
    for (int b = 0; b < n; ++b) delta(0, b) = first(b) + log_emit(b, 0);
  }

  std::vector<double> best(static_cast<size_t>(n)), candidate(static_cast<size_t>(n));
  std::vector<int> arg(static_cast<size_t>(n));
  for (Eigen::Index t = 1; t < steps; ++t) {
    back[size_t(t)].resize(n, n);
    for (int b = 0; b < n; ++b) {
      std::fill(best.begin(), best.end(), kLogZero);
      std::fill(arg.begin(), arg.end(), 0);
      for (int a = 0; a < n; ++a) {
        const double prev = delta(a, b);
        if (prev == kLogZero) continue;
        std::fill(candidate.begin(), candidate.end(), prev + fallback(a, b));
        for (const auto& [c, lp] : overrides[size_t(a) * size_t(n) + size_t(b)]) {
          candidate[size_t(c)] = prev + lp;
        }
        for (int c = 0; c < n; ++c) {
          if (candidate[size_t(c)] > best[size_t(c)]) {
            best[size_t(c)] = candidate[size_t(c)];
            arg[size_t(c)] = a;
          }
        }
      }
      for (int c = 0; c < n; ++c) {
        next(b, c) = best[size_t(c)] + log_emit(c, t);
        back[size_t(t)](b, c) = arg[size_t(c)];
      }
    }
    delta.swap(next);
  }

  double top = kLogZero;
  int last_a = 0, last_b = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (delta(a, b) > top) {
        top = delta(a, b);
        last_a = a;
        last_b = b;
      }
    }
  }
  score = top;

  std::vector<int> path(static_cast<size_t>(steps));
  path.back() = last_b;
  if (steps >= 2) path[size_t(steps - 2)] = last_a;
  for (Eigen::Index t = steps - 1; t >= 2; --t) {
    path[size_t(t - 2)] = back[size_t(t)](path[size_t(t - 1)], path[size_t(t)]);
  }
  return path;
}

}  // namespace

std::vector<ProbabilisticCandidate> make_candidates(const Eigen::MatrixXd& normalized_salience,
                                                    std::span<const int> pitches,
                                                    std::span<const NoteEvent> events, double hop) {
  if (normalized_salience.rows() != Eigen::Index(pitches.size())) {
    throw Error(ErrorCode::DimensionMismatch, "salience rows do not match pitch list");
  }
  std::vector<ProbabilisticCandidate> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    const auto it = std::lower_bound(pitches.begin(), pitches.end(), e.pitch);
    if (it == pitches.end() || *it != e.pitch) {
      throw Error(ErrorCode::OutOfRange, "event pitch " + std::to_string(e.pitch) + " not in bank");
    }
    const auto row = Eigen::Index(it - pitches.begin());
    ProbabilisticCandidate c;
    c.pitch = e.pitch;
    c.onset = e.onset;
    c.offset = e.offset;
    c.first_frame = std::clamp<Eigen::Index>(Eigen::Index(std::llround(e.onset / hop)), 0,
                                             normalized_salience.cols());
    c.end_frame = std::clamp<Eigen::Index>(Eigen::Index(std::llround(e.offset / hop)), c.first_frame,
                                           normalized_salience.cols());
    std::vector<double> values;
    for (Eigen::Index t = c.first_frame; t < c.end_frame; ++t) values.push_back(normalized_salience(row, t));
    c.likelihood = std::clamp(median(std::move(values)), 0.0, 1.0);
    out.push_back(c);
  }
  return out;
}

std::vector<ProbabilisticCandidate> perfect_candidates(std::span<const NoteEvent> events) {
  std::vector<ProbabilisticCandidate> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    ProbabilisticCandidate c;
    c.pitch = e.pitch;
    c.onset = e.onset;
    c.offset = e.offset;
    c.likelihood = 1.0;
    out.push_back(c);
  }
  return out;
}

std::vector<int> StateSequence::sequence() const {
  std::vector<int> ids;
  ids.reserve(clusters.size());
  for (const auto& c : clusters) ids.push_back(c.state);
  return ids;
}

std::vector<double> StateSequence::observations() const {
  std::vector<double> obs;
  obs.reserve(clusters.size());
  for (const auto& c : clusters) obs.push_back(c.observation);
  return obs;
}

StateSequence generate_states(std::span<const ProbabilisticCandidate> candidates,
                              const StateGenConfig& cfg) {
  std::vector<ProbabilisticCandidate> kept;
  for (const auto& c : candidates) {
    if (c.offset - c.onset + kTimeSlack >= cfg.min_duration) kept.push_back(c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return std::tie(a.onset, a.pitch) < std::tie(b.onset, b.pitch);
  });

  StateSequence seq;
  seq.states.push_back({{}, 0});

  auto close = [&](std::vector<const ProbabilisticCandidate*>& members) {
    if (members.empty()) return;
    Cluster cluster;
    std::vector<double> onsets, durations;
    double likelihood_sum = 0.0;
    for (const auto* m : members) {
      cluster.pitches.push_back(m->pitch);
      onsets.push_back(m->onset);
      durations.push_back(m->offset - m->onset);
      likelihood_sum += m->likelihood;
    }
    std::sort(cluster.pitches.begin(), cluster.pitches.end());
    cluster.pitches.erase(std::unique(cluster.pitches.begin(), cluster.pitches.end()),
                          cluster.pitches.end());
    cluster.onset = median(onsets);
    cluster.duration = median(durations);
    cluster.observation = likelihood_sum / double(members.size());

    auto it = std::find_if(seq.states.begin(), seq.states.end(),
                           [&](const MixtureState& s) { return s.pitches == cluster.pitches; });
    if (it == seq.states.end()) {
      seq.states.push_back({cluster.pitches, int(seq.states.size())});
      cluster.state = seq.states.back().index;
    } else {
      cluster.state = it->index;
    }
    seq.clusters.push_back(std::move(cluster));
    members.clear();
  };

  std::vector<const ProbabilisticCandidate*> members;
  std::vector<double> member_onsets;
  for (const auto& c : kept) {
    if (!members.empty()) {
      const double centre = median(member_onsets);
      if (std::abs(c.onset - centre) >= cfg.onset_window - kTimeSlack) {
        close(members);
        member_onsets.clear();
      }
    }
    members.push_back(&c);
    member_onsets.push_back(c.onset);
  }
  close(members);
  return seq;
}

std::vector<ProbabilisticCandidate> to_candidates(const StateSequence& seq) {
  std::vector<ProbabilisticCandidate> out;
  for (const auto& c : seq.clusters) {
    for (int pitch : c.pitches) {
      ProbabilisticCandidate p;
      p.pitch = pitch;
      p.onset = c.onset;
      p.offset = c.onset + c.duration;
      p.likelihood = c.observation;
      out.push_back(p);
    }
  }
  return out;
}

std::string Key::label() const {
  static const char* names[] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  return std::string(names[tonic % 12]) + (minor ? " minor" : " major");
}

int TransitionModel::find(const PitchSet& pitches) const {
  for (size_t k = 0; k < states.size(); ++k) {
    if (states[k] == pitches) return int(k);
  }
  return -1;
}

int TransitionModel::intern(const PitchSet& pitches) {
  const int found = find(pitches);
  if (found >= 0) return found;
  states.push_back(pitches);
  return int(states.size()) - 1;
}

TransitionModel make_transition_model(int order) {
  if (order != 1 && order != 2) throw Error(ErrorCode::InvalidConfig, "transition order must be 1 or 2");
  TransitionModel model;
  model.order = order;
  model.states.push_back({});
  return model;
}

void accumulate_transitions(TransitionModel& model, std::span<const PitchSet> sequence) {
  std::vector<int> context = model.start_context();
  for (const auto& pitches : sequence) {
    const int id = model.intern(pitches);
    model.counts[context][id] += 1;
    context.erase(context.begin());
    context.push_back(id);
  }
}

TransitionModel train_transitions(std::span<const std::vector<PitchSet>> sequences, int order) {
  if (sequences.empty()) throw Error(ErrorCode::EmptyTraining, "no training sequences");
  TransitionModel model = make_transition_model(order);
  for (const auto& seq : sequences) accumulate_transitions(model, seq);
  return model;
}

Eigen::VectorXd witten_bell(const TransitionModel& model, std::span<const int> context) {
  const int n = model.n_states();
  if (int(context.size()) != model.order) {
    throw Error(ErrorCode::InvalidArgument, "context length does not match model order");
  }
  const auto it = model.counts.find(std::vector<int>(context.begin(), context.end()));
  if (it == model.counts.end() || stats_of(it->second).total == 0) {
    return Eigen::VectorXd::Constant(n, 1.0 / double(n));
  }
  const auto s = stats_of(it->second);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, unseen_probability(s, n));
  for (const auto& [next, count] : it->second) {
    if (count > 0) p(next) = seen_probability(count, s, n);
  }
  return p;
}

KeyConditionedModel train_key_conditioned(std::span<const std::vector<PitchSet>> sequences,
                                          std::span<const Key> keys) {
  if (sequences.empty()) throw Error(ErrorCode::EmptyTraining, "no training sequences");
  if (sequences.size() != keys.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one key per training sequence is required");
  }
  TransitionModel inventory = make_transition_model(1);
  for (const auto& seq : sequences) {
    for (const auto& pitches : seq) inventory.intern(pitches);
  }
  KeyConditionedModel out;
  for (auto& m : out.models) {
    m = make_transition_model(1);
    m.states = inventory.states;
  }
  for (size_t k = 0; k < sequences.size(); ++k) {
    accumulate_transitions(out.models[size_t(keys[k].index())], sequences[k]);
  }
  return out;
}

std::array<double, 12> chroma(const Spectrogram& spec) {
  std::array<double, 12> out{};
  const Eigen::VectorXd energy = spec.magnitudes * spec.frame_energy;
  for (Eigen::Index f = 0; f < spec.n_bins(); ++f) {
    const double midi = 69.0 + 12.0 * std::log2(spec.bin_frequencies[size_t(f)] / 440.0);
    const int pc = ((int(std::lround(midi)) % 12) + 12) % 12;
    out[size_t(pc)] += energy(f);
  }
  return out;
}

Key key_from_chroma(const std::array<double, 12>& chroma) {
  const double total = std::accumulate(chroma.begin(), chroma.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::AllSilent, "cannot detect the key of silence");
  Key best_key;
  double best = -std::numeric_limits<double>::infinity();
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (bool minor : {false, true}) {
      const double r = correlation(chroma, minor ? kMinorProfile : kMajorProfile, tonic);
      if (r > best) {
        best = r;
        best_key = {tonic, minor};
      }
    }
  }
  return best_key;
}

Key detect_key(const Spectrogram& spec) { return key_from_chroma(chroma(spec)); }

DecodeResult decode_sequence(const StateSequence& seq, const TransitionModel& model) {
  DecodeResult result;
  const Union u = union_with(seq, model);
  result.inventory = u.model.states;
  if (seq.clusters.empty()) return result;

  const Eigen::MatrixXd log_emit = emission_matrix(seq, u);
  result.path = model.order == 1 ? decode_first_order(u, log_emit, result.log_score)
                                 : decode_second_order(u, log_emit, result.log_score);
  result.notes = render_path(seq, result.inventory, result.path);
  return result;
}

DecodeResult decode_sequence(const StateSequence& seq, const KeyConditionedModel& model, Key key) {
  return decode_sequence(seq, model.models[size_t(key.index())]);
}

}  // namespace amt
