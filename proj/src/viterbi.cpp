#include "amt/viterbi.hpp"

#include "amt/error.hpp"

namespace amt {

ViterbiPath viterbi(const Eigen::VectorXd& log_init, const Eigen::MatrixXd& log_trans,
                    const Eigen::MatrixXd& log_emit, const Eigen::VectorXd* log_final) {
  const Eigen::Index n_states = log_init.size();
  const Eigen::Index n_steps = log_emit.cols();
  if (log_trans.rows() != n_states || log_trans.cols() != n_states || log_emit.rows() != n_states ||
      (log_final && log_final->size() != n_states)) {
    throw Error(ErrorCode::DimensionMismatch, "viterbi: inconsistent model dimensions");
  }
  ViterbiPath result;
  if (n_steps == 0 || n_states == 0) return result;

  Eigen::VectorXd delta(n_states), next(n_states);
  Eigen::MatrixXi back(n_states, n_steps);
  back.col(0).setZero();
  for (Eigen::Index s = 0; s < n_states; ++s) delta(s) = log_init(s) + log_emit(s, 0);

  for (Eigen::Index t = 1; t < n_steps; ++t) {
    for (Eigen::Index s = 0; s < n_states; ++s) {
      double best = kLogZero;
      int arg = 0;
      for (Eigen::Index k = 0; k < n_states; ++k) {
        const double score = delta(k) + log_trans(k, s);
        if (score > best) {
          best = score;
          arg = int(k);
        }
      }
      next(s) = best + log_emit(s, t);
      back(s, t) = arg;
    }
    delta.swap(next);
  }

  double best = kLogZero;
  int last = 0;
  for (Eigen::Index s = 0; s < n_states; ++s) {
    const double score = log_final ? delta(s) + (*log_final)(s) : delta(s);
    if (score > best) {
      best = score;
      last = int(s);
    }
  }

  result.log_score = best;
  result.states.resize(size_t(n_steps));
  result.states.back() = last;
  for (Eigen::Index t = n_steps - 1; t > 0; --t) {
    result.states[size_t(t - 1)] = back(result.states[size_t(t)], t);
  }
  return result;
}

}  // namespace amt
