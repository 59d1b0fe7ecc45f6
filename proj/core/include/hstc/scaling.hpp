#pragma once

#include <Eigen/Dense>

#include "hstc/tensor.hpp"

namespace hstc {

/// Per-element affine normalization x -> (x - mean) / stddev over the
/// vectorized input. stddev is stored already clamped below at 1e-12 so a
/// constant feature maps to exactly zero.
struct FeatureScaling {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static constexpr double kStdFloor = 1e-12;

  void apply_in_place(DenseTensor& x) const;
  DenseTensor apply(const DenseTensor& x) const;
};

}  // namespace hstc
