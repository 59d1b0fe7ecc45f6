#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "hstc/cp.hpp"
#include "hstc/dataset.hpp"
#include "hstc/scaling.hpp"
#include "hstc/tensor.hpp"

namespace hstc {

/// Shared optimizer knobs for the block-alternating trainers.
struct TrainConfig {
  int max_sweeps = 200;
  int inner_steps = 10;       // gradient steps per block (linear model)
  double learning_rate = 1.0; // starting step, halved on objective increase
  double l2 = 0.0;
  double rel_tol = 1e-6;
  std::uint64_t seed = 1;
  double init_scale = 0.1;    // entries drawn uniform(+-init_scale/sqrt(rows))

  void validate() const;
};

/// Objective value after each block update; sweep 0 / block -1 is the
/// objective at initialization.
struct TrainTrace {
  struct Entry {
    int sweep;
    int block;
    double objective;
  };
  std::vector<Entry> entries;
  int sweeps_run = 0;
  bool converged = false;
};

/// Multinomial logistic regression whose per-class weight tensor is rank-1
/// decomposed: factor l holds the p_l x C block of mode-l weights.
struct TensorLRModel {
  CPFactorSet weights;
  Index num_classes = 0;
  Shape input_shape;
  std::optional<FeatureScaling> scaling;
};

/// Plain multinomial logistic regression on vectorized inputs. Kept as the
/// reference the decomposed model must collapse to at D = 1.
struct VectorLRModel {
  Eigen::MatrixXd weights;  // prod(p) x C
  Index num_classes = 0;
  Shape input_shape;
  std::optional<FeatureScaling> scaling;
};

template <typename Model>
struct FitResult {
  Model model;
  TrainTrace trace;
};

// ---- prediction ----

/// Class probabilities softmax(z) with z_k the decomposed inner product of
/// weight column k against x. Applies model scaling when present.
Eigen::VectorXd predict_proba(const TensorLRModel& m, const DenseTensor& x);
Eigen::VectorXd predict_proba(const VectorLRModel& m, const DenseTensor& x);

/// argmax of predict_proba; ties break to the lowest class index.
Index predict_class(const TensorLRModel& m, const DenseTensor& x);
Index predict_class(const VectorLRModel& m, const DenseTensor& x);

// ---- objective ----

/// Pure negative log-likelihood over the dataset.
double nll(const TensorLRModel& m, const PatchDataset& data);
double nll(const VectorLRModel& m, const PatchDataset& data);

/// nll plus (l2/2) * squared Frobenius norm of all weight blocks.
double regularized_objective(const TensorLRModel& m, const PatchDataset& data,
                             double l2);
double regularized_objective(const VectorLRModel& m, const PatchDataset& data,
                             double l2);

/// Exact gradient of the regularized objective w.r.t. factor `mode`, all
/// other factors held fixed. Each class column k is regressed against its
/// own transformed inputs tau_{!=mode}^{(k)}.
Eigen::MatrixXd block_gradient(const TensorLRModel& m, const PatchDataset& data,
                               Index mode, double l2);

/// Full gradient of the vectorized model's regularized objective.
Eigen::MatrixXd gradient(const VectorLRModel& m, const PatchDataset& data,
                         double l2);

// ---- training ----

/// Block-alternating fit: per sweep, modes are visited in order and each
/// factor takes inner_steps backtracked gradient steps against transformed
/// inputs formed from the already-updated earlier modes; factors are
/// renormalized after every sweep (unit columns, scale absorbed into the
/// last mode). The objective trace is non-increasing by construction.
FitResult<TensorLRModel> fit_tensor_lr(const PatchDataset& data,
                                       const TrainConfig& cfg);

/// Gradient-descent fit of the vectorized baseline under the same
/// safeguard and trace contract.
FitResult<VectorLRModel> fit_vector_lr(const PatchDataset& data,
                                       const TrainConfig& cfg);

// ---- parameter accounting ----

Index tensor_lr_param_count(Index num_classes, const Shape& shape);
Index vector_lr_param_count(Index num_classes, const Shape& shape);
Index param_count(const TensorLRModel& m);
Index param_count(const VectorLRModel& m);

}  // namespace hstc
