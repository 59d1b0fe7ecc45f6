#pragma once

#include <Eigen/Dense>

namespace hstc {

/// Numerically stable softmax (the running maximum is subtracted before
/// exponentiation).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Index of the largest entry; ties resolve to the lowest index.
Eigen::Index argmax_lowest_tie(const Eigen::VectorXd& v);

/// Negative log-likelihood of one-hot targets under row-wise softmax of the
/// logits. Probabilities are clamped at 1e-300 before the log, so the result
/// is finite for any finite logits.
double nll_from_logits(const Eigen::MatrixXd& logits,
                       const Eigen::MatrixXd& targets);

}  // namespace hstc
