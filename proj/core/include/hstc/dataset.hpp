#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "hstc/tensor.hpp"

namespace hstc {

/// Labeled collection of equally shaped patches with exact one-hot targets.
struct PatchDataset {
  std::vector<DenseTensor> patches;
  Eigen::MatrixXd targets;  // N x C, entries in {0,1}, rows sum to 1
  std::vector<std::pair<Index, Index>> coords;  // source pixel (row, col)
  std::string split;                            // "train" | "test" | ""

  Index size() const { return static_cast<Index>(patches.size()); }
  Index num_classes() const { return targets.cols(); }
  Shape patch_shape() const;

  /// 0-based class of sample i (position of the 1 in the target row).
  Index label(Index i) const;

  /// Number of distinct classes that actually occur in the targets.
  Index distinct_labels() const;

  /// Shape uniformity and exact one-hot rows; throws std::invalid_argument.
  void validate() const;
};

/// Builds one-hot targets from 0-based labels.
PatchDataset dataset_from_labels(std::vector<DenseTensor> patches,
                                 const std::vector<Index>& labels,
                                 Index num_classes);

}  // namespace hstc
