// Reference implementations used as test oracles. Each one follows the model
// definition directly (enumeration or explicit state expansion) and shares no
// code with the library decoders.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Scored state path.
struct Best {
  std::vector<int> path;
  double score = kNegInf;
};

// log b(off, y), log b(on, y) with clamping to [0, 1] and a 1e-6 floor.
inline double log_emit_on_off(int state, double y) {
  y = std::isnan(y) ? 0.0 : std::min(1.0, std::max(0.0, y));
  const double p = state == 1 ? y : 1.0 - y;
  return std::log(std::max(p, 1e-6));
}

// Calls visit(path) for every path over n_states of length T, with the last
// frame varying slowest. Paths therefore arrive in increasing reverse
// lexicographic order.
template <typename Visit>
void for_each_path(int n_states, int T, Visit&& visit) {
  std::vector<int> path(size_t(T), 0);
  while (true) {
    visit(path);
    int t = 0;
    while (t < T && path[size_t(t)] == n_states - 1) path[size_t(t++)] = 0;
    if (t == T) return;
    ++path[size_t(t)];
  }
}

// Score of one path, accumulated left to right as ((score + log_trans) + log_emit).
inline double first_order_path_score(const std::vector<double>& log_init,
                                     const std::vector<std::vector<double>>& log_trans,
                                     const std::vector<std::vector<double>>& log_emit,  // [t][s]
                                     const std::vector<int>& path, const std::vector<double>& log_final = {}) {
  double s = log_init[size_t(path[0])] + log_emit[0][size_t(path[0])];
  for (size_t t = 1; t < path.size(); ++t) {
    s = s + log_trans[size_t(path[t - 1])][size_t(path[t])];
    s = s + log_emit[t][size_t(path[t])];
  }
  if (!log_final.empty()) s = s + log_final[size_t(path.back())];
  return s;
}

// Exhaustive first-order search. Scores accumulate left to right as
// ((score + log_trans) + log_emit). Among equal scores the first path visited
// wins, i.e. the reverse-lexicographically smallest one.
inline Best enumerate_first_order(const std::vector<double>& log_init,
                                  const std::vector<std::vector<double>>& log_trans,
                                  const std::vector<std::vector<double>>& log_emit,  // [t][s]
                                  const std::vector<double>& log_final = {}) {
  const int n = int(log_init.size());
  const int T = int(log_emit.size());
  Best best;
  bool first = true;
  for_each_path(n, T, [&](const std::vector<int>& path) {
    const double s = first_order_path_score(log_init, log_trans, log_emit, path, log_final);
    if (first || s > best.score) {
      best = {path, s};
      first = false;
    }
  });
  return best;
}

// Plain dynamic-programming Viterbi with the same tie rule as the library:
// the lowest predecessor index and the lowest final state win ties.
inline Best viterbi_reference(const std::vector<double>& log_init,
                              const std::vector<std::vector<double>>& log_trans,
                              const std::vector<std::vector<double>>& log_emit,
                              const std::vector<double>& log_final = {}) {
  const int n = int(log_init.size());
  const int T = int(log_emit.size());
  std::vector<std::vector<double>> delta(size_t(T), std::vector<double>(size_t(n), kNegInf));
  std::vector<std::vector<int>> back(size_t(T), std::vector<int>(size_t(n), 0));
  for (int s = 0; s < n; ++s) delta[0][size_t(s)] = log_init[size_t(s)] + log_emit[0][size_t(s)];
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < n; ++s) {
      double top = kNegInf;
      int arg = 0;
      for (int k = 0; k < n; ++k) {
        const double v = delta[size_t(t - 1)][size_t(k)] + log_trans[size_t(k)][size_t(s)];
        if (v > top) {
          top = v;
          arg = k;
        }
      }
      delta[size_t(t)][size_t(s)] = top + log_emit[size_t(t)][size_t(s)];
      back[size_t(t)][size_t(s)] = arg;
    }
  }
  Best best;
  int last = 0;
  for (int s = 0; s < n; ++s) {
    const double v = delta[size_t(T - 1)][size_t(s)] + (log_final.empty() ? 0.0 : log_final[size_t(s)]);
    if (v > best.score) {
      best.score = v;
      last = s;
    }
  }
  best.path.assign(size_t(T), 0);
  best.path[size_t(T - 1)] = last;
  for (int t = T - 1; t > 0; --t) best.path[size_t(t - 1)] = back[size_t(t)][size_t(best.path[size_t(t)])];
  return best;
}

// On/off chain scored by enumeration. trans[from][to], prior_on = P(q_1 = on).
inline Best enumerate_on_off(const std::vector<double>& y, double prior_on, const double trans[2][2]) {
  std::vector<double> init = {std::log(1.0 - prior_on), std::log(prior_on)};
  std::vector<std::vector<double>> lt = {{std::log(trans[0][0]), std::log(trans[0][1])},
                                         {std::log(trans[1][0]), std::log(trans[1][1])}};
  std::vector<std::vector<double>> le;
  for (double v : y) le.push_back({log_emit_on_off(0, v), log_emit_on_off(1, v)});
  return enumerate_first_order(init, lt, le);
}

// Duration model expanded into a first-order chain over 2 * order cells,
// cell = state * order + (stay - 1). stay[i][d - 1] = ã(i, d).
struct ExpandedChain {
  std::vector<double> log_init;
  std::vector<std::vector<double>> log_trans;
  std::vector<double> log_final;
};

inline ExpandedChain expand_duration(const std::vector<std::vector<double>>& stay, int order,
                                     bool final_off) {
  const int n = 2 * order;
  ExpandedChain c;
  c.log_init.assign(size_t(n), kNegInf);
  c.log_init[0] = 0.0;
  c.log_trans.assign(size_t(n), std::vector<double>(size_t(n), kNegInf));
  c.log_final.assign(size_t(n), final_off ? kNegInf : 0.0);
  for (int i = 0; i < 2; ++i) {
    for (int d = 1; d <= order; ++d) {
      const int from = i * order + d - 1;
      const double a = stay[size_t(i)][size_t(d - 1)];
      const int stay_to = i * order + std::min(d + 1, order) - 1;
      c.log_trans[size_t(from)][size_t(stay_to)] = std::log(a);
      c.log_trans[size_t(from)][size_t((1 - i) * order)] = std::log(1.0 - a);
      if (i == 0 && final_off) c.log_final[size_t(from)] = 0.0;
    }
  }
  return c;
}

// Per-cell emissions of an on/off observation sequence on the expanded chain.
inline std::vector<std::vector<double>> expanded_emissions(const std::vector<double>& y, int order) {
  std::vector<std::vector<double>> le;
  for (double v : y) {
    std::vector<double> row(size_t(2 * order));
    for (int c = 0; c < 2 * order; ++c) row[size_t(c)] = log_emit_on_off(c / order, v);
    le.push_back(row);
  }
  return le;
}

// Witten-Bell successor distribution from raw successor counts over n states.
// Returns count / (total + distinct) for seen states and the reserved mass
// split evenly over the unseen ones; an empty context is uniform.
inline std::vector<double> witten_bell(const std::map<int, int64_t>& successors, int n) {
  int64_t total = 0, distinct = 0;
  for (const auto& [s, c] : successors) {
    total += c;
    distinct += c > 0;
  }
  std::vector<double> p(size_t(n), 1.0 / n);
  if (total == 0) return p;
  const int64_t unseen = n - distinct;
  for (int s = 0; s < n; ++s) {
    const auto it = successors.find(s);
    const int64_t c = it == successors.end() ? 0 : it->second;
    if (c > 0) {
      p[size_t(s)] = unseen == 0 ? double(c) / double(total) : double(c) / double(total + distinct);
    } else {
      p[size_t(s)] = double(distinct) / (double(unseen) * double(total + distinct));
    }
  }
  return p;
}

// Brute-force mixture-state decoding of order 1 or 2. context_counts maps a
// context (order state ids, silence = 0 at the start) to successor counts.
// log_emit[t][s] is the emission of cluster t in state s.
inline double best_harmonic_score(const std::map<std::vector<int>, std::map<int, int64_t>>& counts,
                                  int order, int n, const std::vector<std::vector<double>>& log_emit,
                                  std::vector<int>* argmax = nullptr) {
  const int T = int(log_emit.size());
  double best = kNegInf;
  for_each_path(n, T, [&](const std::vector<int>& path) {
    const double s = [&] {
      std::vector<int> ctx(size_t(order), 0);
      double total = 0.0;
      for (int t = 0; t < T; ++t) {
        const auto it = counts.find(ctx);
        const auto p = witten_bell(it == counts.end() ? std::map<int, int64_t>{} : it->second, n);
        total += std::log(p[size_t(path[size_t(t)])]) + log_emit[size_t(t)][size_t(path[size_t(t)])];
        ctx.erase(ctx.begin());
        ctx.push_back(path[size_t(t)]);
      }
      return total;
    }();
    if (s > best) {
      best = s;
      if (argmax) *argmax = path;
    }
  });
  return best;
}

// Score of one given path under the same model as best_harmonic_score.
inline double harmonic_path_score(const std::map<std::vector<int>, std::map<int, int64_t>>& counts,
                                  int order, int n, const std::vector<std::vector<double>>& log_emit,
                                  const std::vector<int>& path) {
  std::vector<int> ctx(size_t(order), 0);
  double total = 0.0;
  for (size_t t = 0; t < path.size(); ++t) {
    const auto it = counts.find(ctx);
    const auto p = witten_bell(it == counts.end() ? std::map<int, int64_t>{} : it->second, n);
    total += std::log(p[size_t(path[t])]) + log_emit[t][size_t(path[t])];
    ctx.erase(ctx.begin());
    ctx.push_back(path[t]);
  }
  return total;
}

// TPR, PPV and F-measure straight from their definitions.
struct Triple {
  double tpr, ppv, f;
};

inline Triple metrics(long tp, long fp, long fn) {
  if (tp + fp + fn == 0) return {1.0, 1.0, 1.0};
  const double tpr = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  const double ppv = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  const double f = 2 * tp + fp + fn > 0 ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
  return {tpr, ppv, f};
}

}  // namespace oracle
