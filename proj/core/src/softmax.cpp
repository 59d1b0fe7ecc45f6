#include "hstc/softmax.hpp"

#include <algorithm>
#include <cmath>

namespace hstc {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double shift = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - shift).exp();
  p /= p.sum();
  return p;
}

Eigen::Index argmax_lowest_tie(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;  // strict: ties keep the lower index
  }
  return best;
}

double nll_from_logits(const Eigen::MatrixXd& logits,
                       const Eigen::MatrixXd& targets) {
  static const double kLogFloor = std::log(1e-300);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    const double lse =
        shift + std::log((logits.row(i).array() - shift).exp().sum());
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      if (targets(i, k) != 0.0) {
        const double log_p = std::max(logits(i, k) - lse, kLogFloor);
        total -= targets(i, k) * log_p;
      }
    }
  }
  return total;
}

}  // namespace hstc
