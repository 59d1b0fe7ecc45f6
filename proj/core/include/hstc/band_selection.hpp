#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "hstc/dataset.hpp"
#include "hstc/linear_model.hpp"
#include "hstc/scaling.hpp"
#include "hstc/tensor.hpp"

namespace hstc {

/// Spectral-band importance derived from a trained linear model. order is
/// the band permutation sorted by descending score (ties to the lower
/// index); degenerate flags an untrained all-zero spectral factor.
struct BandRanking {
  Eigen::VectorXd scores;
  std::vector<Index> order;  // 0-based band indices
  std::string source_model;
  bool degenerate = false;
};

/// Score of band b = sum over classes of |W_D(b, k)|, read from the
/// spectral (last) mode factor.
BandRanking band_importance(const TensorLRModel& m);

/// Reorders the spectral slices of an H x W x B cube by the ranking and
/// keeps the first n.
DenseTensor select_bands(const DenseTensor& cube, const BandRanking& ranking,
                         Index n);

/// Per-band mean/std over the training samples (pooled across samples and
/// spatial positions, population variance), broadcast to the per-element
/// scaling vectors models carry.
FeatureScaling compute_band_scaling(const PatchDataset& train);

/// Applies the affine transform to every patch.
PatchDataset apply_scaling(const PatchDataset& data,
                           const FeatureScaling& scaling);

struct NormalizeResult {
  PatchDataset data;
  FeatureScaling scaling;
};

/// compute_band_scaling + apply_scaling on the training split.
NormalizeResult normalize_features(const PatchDataset& train);

}  // namespace hstc
