#include "hstc/band_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hstc {

BandRanking band_importance(const TensorLRModel& m) {
  if (m.weights.factors.empty()) {
    throw std::invalid_argument("band_importance: model has no weights");
  }
  const Eigen::MatrixXd& spectral = m.weights.factors.back();
  BandRanking r;
  r.scores = spectral.cwiseAbs().rowwise().sum();
  r.order.resize(static_cast<std::size_t>(r.scores.size()));
  std::iota(r.order.begin(), r.order.end(), Index{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](Index a, Index b) {
    if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
    return a < b;
  });
  r.source_model = "tensor_lr";
  r.degenerate = r.scores.maxCoeff() == 0.0;
  return r;
}

DenseTensor select_bands(const DenseTensor& cube, const BandRanking& ranking,
                         Index n) {
  if (cube.order() != 3) {
    throw std::invalid_argument("select_bands: cube must be H x W x B");
  }
  const Index bands = cube.dim(2);
  if (static_cast<Index>(ranking.order.size()) != bands) {
    throw std::invalid_argument("select_bands: ranking covers " +
                                std::to_string(ranking.order.size()) +
                                " bands, cube has " + std::to_string(bands));
  }
  if (n < 1 || n > bands) {
    throw std::out_of_range("select_bands: n = " + std::to_string(n) +
                            " outside 1.." + std::to_string(bands));
  }
  const Index plane = cube.dim(0) * cube.dim(1);
  DenseTensor out(Shape{cube.dim(0), cube.dim(1), n});
  for (Index j = 0; j < n; ++j) {
    // each band is one contiguous H*W block in first-index-fastest order
    out.data().segment(j * plane, plane) =
        cube.data().segment(ranking.order[static_cast<std::size_t>(j)] * plane,
                            plane);
  }
  return out;
}

FeatureScaling compute_band_scaling(const PatchDataset& train) {
  train.validate();
  const Shape shape = train.patch_shape();
  const Index bands = shape.back();
  const Index per_band = shape_size(shape) / bands;  // spatial positions
  const Index n = train.size();

  // pooled over samples and spatial positions, per spectral band
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(bands);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(bands);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(bands, 1e300);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(bands, -1e300);
  const double count = static_cast<double>(n * per_band);
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& v = vectorize(train.patches[static_cast<std::size_t>(i)]);
    for (Index b = 0; b < bands; ++b) {
      const auto seg = v.segment(b * per_band, per_band);
      mean[b] += seg.sum();
      lo[b] = std::min(lo[b], seg.minCoeff());
      hi[b] = std::max(hi[b], seg.maxCoeff());
    }
  }
  mean /= count;
  for (Index b = 0; b < bands; ++b) {
    if (lo[b] == hi[b]) mean[b] = lo[b];  // constant band centers exactly
  }
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& v = vectorize(train.patches[static_cast<std::size_t>(i)]);
    for (Index b = 0; b < bands; ++b) {
      var[b] += (v.segment(b * per_band, per_band).array() - mean[b])
                    .square()
                    .sum();
    }
  }
  var /= count;

  FeatureScaling s;
  s.mean.resize(shape_size(shape));
  s.stddev.resize(shape_size(shape));
  for (Index b = 0; b < bands; ++b) {
    const double sd = std::max(std::sqrt(var[b]), FeatureScaling::kStdFloor);
    s.mean.segment(b * per_band, per_band).setConstant(mean[b]);
    s.stddev.segment(b * per_band, per_band).setConstant(sd);
  }
  return s;
}

PatchDataset apply_scaling(const PatchDataset& data,
                           const FeatureScaling& scaling) {
  PatchDataset out = data;
  for (auto& patch : out.patches) {
    scaling.apply_in_place(patch);
  }
  return out;
}

NormalizeResult normalize_features(const PatchDataset& train) {
  FeatureScaling scaling = compute_band_scaling(train);
  return {apply_scaling(train, scaling), std::move(scaling)};
}

}  // namespace hstc
