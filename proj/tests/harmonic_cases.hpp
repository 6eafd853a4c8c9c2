// Random transition models and cluster sequences for decoder checks.
#pragma once

#include <random>
#include <vector>

#include "amt/harmonic.hpp"

namespace testdata {

using amt::PitchSet;

// Cluster sequence over the given mixtures, one cluster per 0.5 s.
inline amt::StateSequence sequence_of(const std::vector<PitchSet>& mixtures, const std::vector<double>& obs) {
  amt::StateSequence seq;
  seq.states.push_back({{}, 0});
  for (size_t t = 0; t < mixtures.size(); ++t) {
    int id = -1;
    for (const auto& s : seq.states) {
      if (s.pitches == mixtures[t]) id = s.index;
    }
    if (id < 0) {
      id = int(seq.states.size());
      seq.states.push_back({mixtures[t], id});
    }
    amt::Cluster c;
    c.pitches = mixtures[t];
    c.onset = 0.5 * double(t);
    c.duration = 0.4;
    c.observation = obs[t];
    c.state = id;
    seq.clusters.push_back(c);
  }
  return seq;
}

// Random model with states drawn from `pool`, random counts on random contexts.
inline amt::TransitionModel random_model(int order, const std::vector<PitchSet>& pool, std::mt19937_64& rng) {
  auto m = amt::make_transition_model(order);
  for (const auto& p : pool) m.intern(p);
  const int n = m.n_states();
  const int contexts = 1 + int(rng() % 8);
  for (int k = 0; k < contexts; ++k) {
    std::vector<int> ctx;
    for (int j = 0; j < order; ++j) ctx.push_back(int(rng() % unsigned(n)));
    const int successors = 1 + int(rng() % unsigned(n));
    for (int j = 0; j < successors; ++j) m.counts[ctx][int(rng() % unsigned(n))] += 1 + int64_t(rng() % 5);
  }
  return m;
}

}  // namespace testdata
