#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "hstc/linear_model.hpp"
#include "hstc/rng.hpp"
#include "hstc/softmax.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace hstc;
using hstc::testing::max_grad_rel_err;
using hstc::testing::naive_kron_inner;
using hstc::testing::naive_kron_vector;
using hstc::testing::planted_rank1_task;

namespace {

DenseTensor random_tensor(Rng& rng, const Shape& shape) {
  DenseTensor t(shape);
  for (Index j = 0; j < t.size(); ++j) {
    t.data()[j] = rng.uniform(-1.0, 1.0);
  }
  return t;
}

TensorLRModel random_model(Rng& rng, const Shape& shape, Index num_classes,
                           double half_width = 0.5) {
  TensorLRModel m;
  m.num_classes = num_classes;
  m.input_shape = shape;
  for (const Index p : shape) {
    m.weights.factors.push_back(uniform_matrix(rng, p, num_classes, half_width));
  }
  return m;
}

PatchDataset random_dataset(Rng& rng, const Shape& shape, Index num_classes,
                            Index n) {
  std::vector<DenseTensor> xs;
  std::vector<Index> ys;
  for (Index i = 0; i < n; ++i) {
    xs.push_back(random_tensor(rng, shape));
    ys.push_back(static_cast<Index>(rng.below(num_classes)));
  }
  return dataset_from_labels(std::move(xs), ys, num_classes);
}

double max_trace_increase(const TrainTrace& trace) {
  double worst = -1e300;
  for (std::size_t i = 1; i < trace.entries.size(); ++i) {
    worst = std::max(worst, trace.entries[i].objective -
                                trace.entries[i - 1].objective);
  }
  return worst;
}

double accuracy(const TensorLRModel& m, const PatchDataset& data) {
  Index hits = 0;
  for (Index i = 0; i < data.size(); ++i) {
    if (predict_class(m, data.patches[static_cast<std::size_t>(i)]) ==
        data.label(i)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double accuracy(const VectorLRModel& m, const PatchDataset& data) {
  Index hits = 0;
  for (Index i = 0; i < data.size(); ++i) {
    if (predict_class(m, data.patches[static_cast<std::size_t>(i)]) ==
        data.label(i)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("zero weights predict the uniform distribution") {
  TensorLRModel m;
  m.num_classes = 4;
  m.input_shape = {2, 3};
  m.weights.factors = {Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(3, 4)};
  Rng rng(1);
  const Eigen::VectorXd p = predict_proba(m, random_tensor(rng, {2, 3}));
  for (Index k = 0; k < 4; ++k) {
    CHECK(p[k] == doctest::Approx(0.25).epsilon(1e-14));
  }
  CHECK(predict_class(m, random_tensor(rng, {2, 3})) == 0);  // tie-break
}

TEST_CASE("probabilities are normalized and in range for rough inputs") {
  Rng rng(2);
  const Shape shape{3, 2, 4};
  const TensorLRModel m = random_model(rng, shape, 5, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    DenseTensor x = random_tensor(rng, shape);
    x.data() *= std::pow(10.0, rng.uniform(-3.0, 3.0));
    const Eigen::VectorXd p = predict_proba(m, x);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
  }
}

TEST_CASE("decomposed prediction equals the explicit Kronecker expansion") {
  Rng rng(3);
  const Shape shape{3, 2, 4};
  const TensorLRModel m = random_model(rng, shape, 3);

  VectorLRModel expanded;
  expanded.num_classes = 3;
  expanded.input_shape = shape;
  expanded.weights.resize(shape_size(shape), 3);
  for (Index k = 0; k < 3; ++k) {
    expanded.weights.col(k) = naive_kron_vector(m.weights, k);
  }

  for (int rep = 0; rep < 20; ++rep) {
    const DenseTensor x = random_tensor(rng, shape);
    const Eigen::VectorXd a = predict_proba(m, x);
    const Eigen::VectorXd b = predict_proba(expanded, x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(predict_class(m, x) == predict_class(expanded, x));
  }
}

TEST_CASE("order-2 model is the bilinear form of the matrix variant") {
  Rng rng(4);
  const Shape shape{4, 5};
  const TensorLRModel m = random_model(rng, shape, 3);
  const DenseTensor x = random_tensor(rng, shape);

  Eigen::MatrixXd xm(4, 5);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 5; ++j) {
      xm(i, j) = x(i, j);
    }
  }
  Eigen::VectorXd logits(3);
  for (Index k = 0; k < 3; ++k) {
    logits[k] = m.weights.factors[0].col(k).dot(xm * m.weights.factors[1].col(k));
  }
  const Eigen::VectorXd expect = softmax(logits);
  const Eigen::VectorXd got = predict_proba(m, x);
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predict_class picks the dominant class and rejects bad inputs") {
  Rng rng(5);
  const Shape shape{3, 3};
  TensorLRModel m = random_model(rng, shape, 3, 0.01);
  // make class 2 dominant everywhere by a constant outer-product bump
  m.weights.factors[0].col(2).setConstant(3.0);
  m.weights.factors[1].col(2).setConstant(3.0);
  DenseTensor x = DenseTensor::constant(shape, 1.0);
  CHECK(predict_class(m, x) == 2);

  CHECK_THROWS_AS(predict_proba(m, DenseTensor(Shape{2, 2})),
                  std::invalid_argument);
  DenseTensor bad = DenseTensor::constant(shape, 1.0);
  bad.data()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict_proba(m, bad), std::invalid_argument);
}

TEST_CASE("argmax is invariant to a shared logit shift") {
  Rng rng(6);
  const Shape shape{6};
  VectorLRModel m;
  m.num_classes = 4;
  m.input_shape = shape;
  m.weights = uniform_matrix(rng, 6, 4, 1.0);
  VectorLRModel shifted = m;
  const Eigen::VectorXd bump = uniform_matrix(rng, 6, 1, 1.0);
  for (Index k = 0; k < 4; ++k) {
    shifted.weights.col(k) += bump;  // adds the same value to every logit
  }
  for (int rep = 0; rep < 30; ++rep) {
    const DenseTensor x = random_tensor(rng, shape);
    CHECK(predict_class(m, x) == predict_class(shifted, x));
  }
}

TEST_CASE("nll of a near-perfect model tends to zero") {
  Rng rng(7);
  const auto task = planted_rank1_task(7, {3, 3, 4}, 3, 20, 0);
  // recover the planted boundary by training, then sharpen it
  TrainConfig cfg;
  cfg.seed = 7;
  cfg.max_sweeps = 60;
  auto fit = fit_tensor_lr(task.train, cfg);
  REQUIRE(accuracy(fit.model, task.train) == 1.0);
  fit.model.weights.factors[0] *= 4.0;  // scale all logits up
  CHECK(nll(fit.model, task.train) < 1e-3);
}

TEST_CASE("nll of zero weights is N log C") {
  Rng rng(8);
  const Shape shape{2, 3};
  TensorLRModel m;
  m.num_classes = 3;
  m.input_shape = shape;
  m.weights.factors = {Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(3, 3)};
  const PatchDataset data = random_dataset(rng, shape, 3, 17);
  CHECK(nll(m, data) == doctest::Approx(17.0 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("nll matches a naively computed sum") {
  Rng rng(9);
  const Shape shape{2, 3, 2};
  const TensorLRModel m = random_model(rng, shape, 3);
  const PatchDataset data = random_dataset(rng, shape, 3, 10);

  double expect = 0.0;
  for (Index i = 0; i < 10; ++i) {
    Eigen::VectorXd z(3);
    for (Index k = 0; k < 3; ++k) {
      z[k] = naive_kron_inner(m.weights, k,
                              data.patches[static_cast<std::size_t>(i)]);
    }
    const double shift = z.maxCoeff();
    const double lse = shift + std::log((z.array() - shift).exp().sum());
    expect -= z[data.label(i)] - lse;
  }
  CHECK(nll(m, data) == doctest::Approx(expect).epsilon(1e-12));

  const double reg = regularized_objective(m, data, 0.3);
  double frob2 = 0.0;
  for (const auto& f : m.weights.factors) frob2 += f.squaredNorm();
  CHECK(reg == doctest::Approx(nll(m, data) + 0.15 * frob2).epsilon(1e-12));
}

TEST_CASE("block gradients match central finite differences") {
  Rng rng(10);
  const Shape shape{2, 3, 4};
  TensorLRModel m = random_model(rng, shape, 3);
  const PatchDataset data = random_dataset(rng, shape, 3, 5);
  const double l2 = 0.1;
  const auto objective = [&] { return regularized_objective(m, data, l2); };
  for (Index mode = 0; mode < 3; ++mode) {
    const Eigen::MatrixXd analytic = block_gradient(m, data, mode, l2);
    const double worst = max_grad_rel_err(
        analytic, m.weights.factors[static_cast<std::size_t>(mode)], objective);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("zero input tensors contribute nothing to the block gradient") {
  Rng rng(11);
  const Shape shape{2, 3};
  const TensorLRModel m = random_model(rng, shape, 3);
  std::vector<DenseTensor> xs(4, DenseTensor(shape));  // all-zero patches
  const PatchDataset data = dataset_from_labels(std::move(xs), {0, 1, 2, 0}, 3);
  for (Index mode = 0; mode < 2; ++mode) {
    CHECK(block_gradient(m, data, mode, 0.0).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd reg_only = block_gradient(m, data, mode, 0.7);
    const Eigen::MatrixXd expect =
        0.7 * m.weights.factors[static_cast<std::size_t>(mode)];
    CHECK((reg_only - expect).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("block gradient vanishes at the minimizer of the convex sub-problem") {
  // at D = 1 the single block is the full strictly convex regularized
  // problem, so a converged fit must sit at a stationary point
  const auto task = planted_rank1_task(12, {6}, 3, 30, 0);
  TrainConfig cfg;
  cfg.seed = 12;
  cfg.l2 = 0.5;
  cfg.max_sweeps = 400;
  cfg.inner_steps = 10;
  cfg.rel_tol = 1e-12;
  const auto fit = fit_tensor_lr(task.train, cfg);
  const Eigen::MatrixXd g = block_gradient(fit.model, task.train, 0, cfg.l2);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("parameter counts follow the decomposed and dense formulas") {
  CHECK(tensor_lr_param_count(1, {1}) == 1);
  CHECK(vector_lr_param_count(1, {1}) == 1);
  CHECK(tensor_lr_param_count(3, {5, 5, 10}) == 60);
  CHECK(vector_lr_param_count(3, {5, 5, 10}) == 750);
  CHECK(tensor_lr_param_count(9, {5, 5, 103}) == 1017);
  CHECK(vector_lr_param_count(9, {5, 5, 103}) == 23175);
  CHECK(vector_lr_param_count(3, {5, 5, 8}) == 600);

  Rng rng(13);
  const TensorLRModel m = random_model(rng, {5, 5, 103}, 9);
  CHECK(param_count(m) == 1017);
}

TEST_CASE("training separates planted rank-1 data") {
  const auto task = planted_rank1_task(14, {5, 5, 8}, 3, 60, 0);
  TrainConfig cfg;
  cfg.seed = 14;
  cfg.max_sweeps = 80;
  const auto fit = fit_tensor_lr(task.train, cfg);
  CHECK(accuracy(fit.model, task.train) >= 0.99);
  CHECK(max_trace_increase(fit.trace) <= 1e-9);
}

TEST_CASE("vector baseline separates 1-D data and shares the trace contract") {
  const auto task = planted_rank1_task(15, {8}, 3, 60, 0);
  TrainConfig cfg;
  cfg.seed = 15;
  cfg.max_sweeps = 80;
  const auto fit = fit_vector_lr(task.train, cfg);
  CHECK(accuracy(fit.model, task.train) >= 0.99);
  CHECK(max_trace_increase(fit.trace) <= 1e-9);
}

TEST_CASE("tensor and vector fits coincide for order-1 inputs") {
  const auto task = planted_rank1_task(16, {7}, 3, 40, 10);
  TrainConfig cfg;
  cfg.seed = 16;
  cfg.max_sweeps = 25;
  cfg.inner_steps = 5;
  cfg.rel_tol = 1e-9;
  const auto tensor_fit = fit_tensor_lr(task.train, cfg);
  const auto vector_fit = fit_vector_lr(task.train, cfg);

  REQUIRE(tensor_fit.trace.entries.size() == vector_fit.trace.entries.size());
  for (std::size_t i = 0; i < tensor_fit.trace.entries.size(); ++i) {
    const double a = tensor_fit.trace.entries[i].objective;
    const double b = vector_fit.trace.entries[i].objective;
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
  }
  for (Index i = 0; i < task.test.size(); ++i) {
    const Eigen::VectorXd pa =
        predict_proba(tensor_fit.model, task.test.patches[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd pb =
        predict_proba(vector_fit.model, task.test.patches[static_cast<std::size_t>(i)]);
    CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("per-column rescaling leaves predictions unchanged") {
  Rng rng(17);
  const Shape shape{3, 2, 4};
  const TensorLRModel m = random_model(rng, shape, 3);

  // emulate the post-sweep renormalization: unit columns, scale into last
  TensorLRModel scaled = m;
  for (Index k = 0; k < 3; ++k) {
    double carried = 1.0;
    for (std::size_t l = 0; l + 1 < scaled.weights.factors.size(); ++l) {
      const double norm = scaled.weights.factors[l].col(k).norm();
      scaled.weights.factors[l].col(k) /= norm;
      carried *= norm;
    }
    scaled.weights.factors.back().col(k) *= carried;
  }
  for (int rep = 0; rep < 20; ++rep) {
    const DenseTensor x = random_tensor(rng, shape);
    const Eigen::VectorXd a = predict_proba(m, x);
    const Eigen::VectorXd b = predict_proba(scaled, x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("degenerate training inputs are rejected") {
  Rng rng(18);
  const Shape shape{3, 2};
  std::vector<DenseTensor> xs(4, DenseTensor(shape));
  PatchDataset single = dataset_from_labels(std::move(xs), {1, 1, 1, 1}, 3);
  TrainConfig cfg;
  CHECK_THROWS_AS(fit_tensor_lr(single, cfg), std::invalid_argument);

  TrainConfig bad;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
