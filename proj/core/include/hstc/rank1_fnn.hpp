#pragma once

#include <Eigen/Dense>

#include <optional>

#include "hstc/cp.hpp"
#include "hstc/dataset.hpp"
#include "hstc/linear_model.hpp"
#include "hstc/scaling.hpp"

namespace hstc {

/// Logistic sigmoid 1/(1+exp(-x)), branch on sign keeps it stable for
/// large |x|.
double sigmoid(double x);

/// One-hidden-layer network whose input-to-hidden weights per neuron are
/// rank-1 decomposed: hidden factor l is p_l x Q (column i feeds neuron i),
/// output holds the Q x C hidden-to-output weights.
struct Rank1FNNModel {
  CPFactorSet hidden;
  Eigen::MatrixXd output;  // Q x C
  Index num_hidden = 0;
  Index num_classes = 0;
  Shape input_shape;
  std::optional<FeatureScaling> scaling;
};

/// Conventional dense counterpart on vectorized inputs; serves as the D=1
/// reference the decomposed network must collapse to.
struct DenseFNNModel {
  Eigen::MatrixXd hidden;  // Q x prod(p), row i = neuron i
  Eigen::MatrixXd output;  // Q x C
  Index num_hidden = 0;
  Index num_classes = 0;
  Shape input_shape;
  std::optional<FeatureScaling> scaling;
};

/// u_i = g(<w^{(i)}, x>) for every hidden neuron, computed via the
/// decomposed inner product. Applies model scaling when present.
Eigen::VectorXd hidden_activations(const Rank1FNNModel& m, const DenseTensor& x);
Eigen::VectorXd hidden_activations(const DenseFNNModel& m, const DenseTensor& x);

/// Class probabilities softmax(V^T u).
Eigen::VectorXd forward(const Rank1FNNModel& m, const DenseTensor& x);
Eigen::VectorXd forward(const DenseFNNModel& m, const DenseTensor& x);

Index predict_class(const Rank1FNNModel& m, const DenseTensor& x);
Index predict_class(const DenseFNNModel& m, const DenseTensor& x);

double nll(const Rank1FNNModel& m, const PatchDataset& data);
double nll(const DenseFNNModel& m, const PatchDataset& data);
double regularized_objective(const Rank1FNNModel& m, const PatchDataset& data,
                             double l2);
double regularized_objective(const DenseFNNModel& m, const PatchDataset& data,
                             double l2);

struct FNNGradients {
  Eigen::MatrixXd hidden;  // p_mode x Q (rank-1) or Q x prod(p) (dense)
  Eigen::MatrixXd output;  // Q x C
};

/// Exact gradients of the regularized objective w.r.t. hidden factor `mode`
/// (all other factors fixed) and the output weights, via backpropagation
/// through the transformed inputs tau_{!=mode}^{(i)}.
FNNGradients block_backprop(const Rank1FNNModel& m, const PatchDataset& data,
                            Index mode, double l2);

/// Standard dense backprop (full hidden gradient).
FNNGradients backprop(const DenseFNNModel& m, const PatchDataset& data,
                      double l2);

/// Block-alternating backpropagation: per sweep, each (mode, neuron) pair
/// takes one backtracked gradient step on its factor column, then each
/// output column is stepped; hidden factors are renormalized per sweep.
/// cfg.inner_steps is not consulted (one step per visit).
FitResult<Rank1FNNModel> fit_rank1_fnn(const PatchDataset& data,
                                       const TrainConfig& cfg,
                                       Index num_hidden);

/// Dense reference trained with the same visit order (per neuron, then per
/// output column) and safeguard, so D=1 runs coincide step for step.
FitResult<DenseFNNModel> fit_dense_fnn(const PatchDataset& data,
                                       const TrainConfig& cfg,
                                       Index num_hidden);

Index rank1_fnn_param_count(Index num_hidden, const Shape& shape,
                            Index num_classes);
Index dense_fnn_param_count(Index num_hidden, const Shape& shape,
                            Index num_classes);
Index param_count(const Rank1FNNModel& m);
Index param_count(const DenseFNNModel& m);

}  // namespace hstc
