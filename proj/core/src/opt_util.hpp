#pragma once

#include <Eigen/Dense>

#include <utility>

namespace hstc::detail {

struct StepOutcome {
  bool accepted = false;
  double objective = 0.0;
};

/// One gradient step with the backtracking safeguard: starting from lr0 the
/// step is halved until the candidate objective does not exceed the current
/// one. Gives up (leaving the weights untouched) once the step underflows,
/// which only happens at a stationary point or the floating-point floor.
template <typename Mat, typename Obj>
StepOutcome backtracked_step(Mat& weights, const Mat& gradient, double lr0,
                             double current_objective, Obj&& objective_of) {
  double lr = lr0;
  for (int halvings = 0; halvings < 60; ++halvings) {
    Mat candidate = weights - lr * gradient;
    const double cand_obj = objective_of(candidate);
    if (cand_obj <= current_objective) {
      weights = std::move(candidate);
      return {true, cand_obj};
    }
    lr *= 0.5;
  }
  return {false, current_objective};
}

}  // namespace hstc::detail
