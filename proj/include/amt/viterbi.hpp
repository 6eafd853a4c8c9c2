#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace amt {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

struct ViterbiPath {
  std::vector<int> states;
  double log_score = kLogZero;
};

// Log-domain first-order Viterbi.
//   log_init(s)        log P(q_1 = s)
//   log_trans(k, s)    log P(q_t = s | q_{t-1} = k)
//   log_emit(s, t)     log P(y_t | q_t = s)
//   log_final(s)       optional terminal weight (0 or -inf to constrain the last state)
// Scores accumulate as ((delta + log_trans) + log_emit). Ties prefer the lower
// state index, both for predecessors and for the final state.
ViterbiPath viterbi(const Eigen::VectorXd& log_init, const Eigen::MatrixXd& log_trans,
                    const Eigen::MatrixXd& log_emit, const Eigen::VectorXd* log_final = nullptr);

}  // namespace amt
