#include "hstc/linear_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hstc/errors.hpp"
#include "hstc/rng.hpp"
#include "hstc/softmax.hpp"
#include "opt_util.hpp"

namespace hstc {

void TrainConfig::validate() const {
  if (max_sweeps < 1) throw std::invalid_argument("TrainConfig: max_sweeps < 1");
  if (inner_steps < 1) throw std::invalid_argument("TrainConfig: inner_steps < 1");
  if (learning_rate <= 0) throw std::invalid_argument("TrainConfig: learning_rate <= 0");
  if (l2 < 0) throw std::invalid_argument("TrainConfig: l2 < 0");
  if (rel_tol <= 0 || rel_tol >= 1) throw std::invalid_argument("TrainConfig: rel_tol not in (0,1)");
  if (init_scale <= 0) throw std::invalid_argument("TrainConfig: init_scale <= 0");
}

namespace {

void check_input(const Shape& expected, const DenseTensor& x, const char* who) {
  if (x.shape() != expected) {
    throw std::invalid_argument(std::string(who) +
                                ": input shape does not match the model");
  }
  if (!x.all_finite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

const DenseTensor& maybe_scaled(const std::optional<FeatureScaling>& scaling,
                                const DenseTensor& x, DenseTensor& scratch) {
  if (!scaling) return x;
  scratch = scaling->apply(x);
  return scratch;
}

double factors_frob2(const CPFactorSet& f) {
  double total = 0.0;
  for (const auto& w : f.factors) total += w.squaredNorm();
  return total;
}

Eigen::MatrixXd tensor_logits(const TensorLRModel& m, const PatchDataset& data) {
  const Index n = data.size();
  Eigen::MatrixXd logits(n, m.num_classes);
  DenseTensor scratch;
  for (Index i = 0; i < n; ++i) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(i)], scratch);
    for (Index k = 0; k < m.num_classes; ++k) {
      logits(i, k) = cp_inner_product(m.weights, k, x);
    }
  }
  return logits;
}

Eigen::MatrixXd vector_logits(const VectorLRModel& m, const PatchDataset& data) {
  const Index n = data.size();
  Eigen::MatrixXd logits(n, m.num_classes);
  DenseTensor scratch;
  for (Index i = 0; i < n; ++i) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(i)], scratch);
    for (Index k = 0; k < m.num_classes; ++k) {
      logits(i, k) = m.weights.col(k).dot(vectorize(x));
    }
  }
  return logits;
}

// Column-wise unit normalization of every factor but the last; the scale
// moves into the last factor, leaving each rank-1 product unchanged.
void renormalize(CPFactorSet& f) {
  const std::size_t d = f.factors.size();
  if (d < 2) return;
  for (Index k = 0; k < f.columns(); ++k) {
    double carried = 1.0;
    for (std::size_t l = 0; l + 1 < d; ++l) {
      const double norm = f.factors[l].col(k).norm();
      if (norm > 0.0) {
        f.factors[l].col(k) /= norm;
        carried *= norm;
      }
    }
    f.factors[d - 1].col(k) *= carried;
  }
}

void check_trainable(const PatchDataset& data) {
  data.validate();
  if (data.num_classes() < 2 || data.distinct_labels() < 2) {
    throw std::invalid_argument("fit: need at least 2 classes in the data");
  }
}

}  // namespace

// ---- prediction ----

Eigen::VectorXd predict_proba(const TensorLRModel& m, const DenseTensor& x) {
  check_input(m.input_shape, x, "predict_proba");
  DenseTensor scratch;
  const DenseTensor& in = maybe_scaled(m.scaling, x, scratch);
  Eigen::VectorXd logits(m.num_classes);
  for (Index k = 0; k < m.num_classes; ++k) {
    logits[k] = cp_inner_product(m.weights, k, in);
  }
  return softmax(logits);
}

Eigen::VectorXd predict_proba(const VectorLRModel& m, const DenseTensor& x) {
  check_input(m.input_shape, x, "predict_proba");
  DenseTensor scratch;
  const DenseTensor& in = maybe_scaled(m.scaling, x, scratch);
  Eigen::VectorXd logits(m.num_classes);
  for (Index k = 0; k < m.num_classes; ++k) {
    logits[k] = m.weights.col(k).dot(vectorize(in));
  }
  return softmax(logits);
}

Index predict_class(const TensorLRModel& m, const DenseTensor& x) {
  return argmax_lowest_tie(predict_proba(m, x));
}

Index predict_class(const VectorLRModel& m, const DenseTensor& x) {
  return argmax_lowest_tie(predict_proba(m, x));
}

// ---- objective ----

double nll(const TensorLRModel& m, const PatchDataset& data) {
  data.validate();
  return nll_from_logits(tensor_logits(m, data), data.targets);
}

double nll(const VectorLRModel& m, const PatchDataset& data) {
  data.validate();
  return nll_from_logits(vector_logits(m, data), data.targets);
}

double regularized_objective(const TensorLRModel& m, const PatchDataset& data,
                             double l2) {
  double obj = nll(m, data);
  if (l2 > 0) obj += 0.5 * l2 * factors_frob2(m.weights);
  return obj;
}

double regularized_objective(const VectorLRModel& m, const PatchDataset& data,
                             double l2) {
  double obj = nll(m, data);
  if (l2 > 0) obj += 0.5 * l2 * m.weights.squaredNorm();
  return obj;
}

Eigen::MatrixXd block_gradient(const TensorLRModel& m, const PatchDataset& data,
                               Index mode, double l2) {
  data.validate();
  if (mode < 0 || mode >= static_cast<Index>(m.weights.factors.size())) {
    throw std::out_of_range("block_gradient: mode " + std::to_string(mode) +
                            " out of range");
  }
  const Index n = data.size();
  const Index c = m.num_classes;
  const Eigen::MatrixXd& w_l = m.weights.factors[static_cast<std::size_t>(mode)];
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(w_l.rows(), c);
  DenseTensor scratch;
  for (Index i = 0; i < n; ++i) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(i)], scratch);
    Eigen::MatrixXd tau(w_l.rows(), c);  // per-class transformed inputs
    Eigen::VectorXd logits(c);
    for (Index k = 0; k < c; ++k) {
      tau.col(k) = transformed_input(x, m.weights, k, mode);
      logits[k] = w_l.col(k).dot(tau.col(k));
    }
    const Eigen::VectorXd p = softmax(logits);
    for (Index k = 0; k < c; ++k) {
      grad.col(k) += (p[k] - data.targets(i, k)) * tau.col(k);
    }
  }
  if (l2 > 0) grad += l2 * w_l;
  return grad;
}

Eigen::MatrixXd gradient(const VectorLRModel& m, const PatchDataset& data,
                         double l2) {
  data.validate();
  const Index n = data.size();
  const Index c = m.num_classes;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(m.weights.rows(), c);
  DenseTensor scratch;
  for (Index i = 0; i < n; ++i) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(i)], scratch);
    const Eigen::VectorXd& v = vectorize(x);
    Eigen::VectorXd logits(c);
    for (Index k = 0; k < c; ++k) {
      logits[k] = m.weights.col(k).dot(v);
    }
    const Eigen::VectorXd p = softmax(logits);
    for (Index k = 0; k < c; ++k) {
      grad.col(k) += (p[k] - data.targets(i, k)) * v;
    }
  }
  if (l2 > 0) grad += l2 * m.weights;
  return grad;
}

// ---- training ----

FitResult<TensorLRModel> fit_tensor_lr(const PatchDataset& data,
                                       const TrainConfig& cfg) {
  cfg.validate();
  check_trainable(data);
  const Shape shape = data.patch_shape();
  const Index num_modes = static_cast<Index>(shape.size());
  const Index c = data.num_classes();
  const Index n = data.size();

  TensorLRModel m;
  m.num_classes = c;
  m.input_shape = shape;
  Rng rng(cfg.seed);
  for (const Index p : shape) {
    m.weights.factors.push_back(
        uniform_matrix(rng, p, c, cfg.init_scale / std::sqrt(double(p))));
  }

  TrainTrace trace;
  double global_obj = regularized_objective(m, data, cfg.l2);
  trace.entries.push_back({0, -1, global_obj});

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double sweep_start = global_obj;
    for (Index l = 0; l < num_modes; ++l) {
      Eigen::MatrixXd& w_l = m.weights.factors[static_cast<std::size_t>(l)];

      // Transformed inputs are fixed while only this block moves; the block
      // sub-problem is an ordinary multinomial regression on them.
      std::vector<Eigen::MatrixXd> taus(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        Eigen::MatrixXd tau(w_l.rows(), c);
        for (Index k = 0; k < c; ++k) {
          tau.col(k) = transformed_input(
              data.patches[static_cast<std::size_t>(i)], m.weights, k, l);
        }
        taus[static_cast<std::size_t>(i)] = std::move(tau);
      }
      const double frob2_rest = factors_frob2(m.weights) - w_l.squaredNorm();

      const auto block_obj = [&](const Eigen::MatrixXd& w) {
        Eigen::MatrixXd logits(n, c);
        for (Index i = 0; i < n; ++i) {
          for (Index k = 0; k < c; ++k) {
            logits(i, k) = w.col(k).dot(taus[static_cast<std::size_t>(i)].col(k));
          }
        }
        double obj = nll_from_logits(logits, data.targets);
        if (cfg.l2 > 0) obj += 0.5 * cfg.l2 * (frob2_rest + w.squaredNorm());
        return obj;
      };

      double block_cur = block_obj(w_l);
      for (int step = 0; step < cfg.inner_steps; ++step) {
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(w_l.rows(), c);
        {
          Eigen::MatrixXd logits(n, c);
          for (Index i = 0; i < n; ++i) {
            for (Index k = 0; k < c; ++k) {
              logits(i, k) =
                  w_l.col(k).dot(taus[static_cast<std::size_t>(i)].col(k));
            }
          }
          for (Index i = 0; i < n; ++i) {
            const Eigen::VectorXd p = softmax(logits.row(i).transpose());
            for (Index k = 0; k < c; ++k) {
              grad.col(k) += (p[k] - data.targets(i, k)) *
                             taus[static_cast<std::size_t>(i)].col(k);
            }
          }
          if (cfg.l2 > 0) grad += cfg.l2 * w_l;
        }
        const auto out = detail::backtracked_step(w_l, grad, cfg.learning_rate,
                                                  block_cur, block_obj);
        if (!out.accepted) break;
        block_cur = out.objective;
        if (!std::isfinite(block_cur)) {
          throw TrainingError("fit_tensor_lr: non-finite objective at sweep " +
                              std::to_string(sweep) + ", block " +
                              std::to_string(l));
        }
      }

      global_obj = regularized_objective(m, data, cfg.l2);
      if (!std::isfinite(global_obj)) {
        throw TrainingError("fit_tensor_lr: non-finite objective at sweep " +
                            std::to_string(sweep) + ", block " +
                            std::to_string(l));
      }
      trace.entries.push_back({sweep, static_cast<int>(l), global_obj});
    }

    renormalize(m.weights);
    trace.sweeps_run = sweep;
    const double decrease = sweep_start - global_obj;
    if (decrease < cfg.rel_tol * std::max(1.0, std::abs(sweep_start))) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(m), std::move(trace)};
}

FitResult<VectorLRModel> fit_vector_lr(const PatchDataset& data,
                                       const TrainConfig& cfg) {
  cfg.validate();
  check_trainable(data);
  const Shape shape = data.patch_shape();
  const Index dim = shape_size(shape);
  const Index c = data.num_classes();
  const Index n = data.size();

  VectorLRModel m;
  m.num_classes = c;
  m.input_shape = shape;
  Rng rng(cfg.seed);
  m.weights = uniform_matrix(rng, dim, c, cfg.init_scale / std::sqrt(double(dim)));

  const auto obj_of = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd logits(n, c);
    for (Index i = 0; i < n; ++i) {
      const Eigen::VectorXd& v =
          vectorize(data.patches[static_cast<std::size_t>(i)]);
      for (Index k = 0; k < c; ++k) {
        logits(i, k) = w.col(k).dot(v);
      }
    }
    double obj = nll_from_logits(logits, data.targets);
    if (cfg.l2 > 0) obj += 0.5 * cfg.l2 * w.squaredNorm();
    return obj;
  };

  TrainTrace trace;
  double cur = obj_of(m.weights);
  trace.entries.push_back({0, -1, cur});

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double sweep_start = cur;
    for (int step = 0; step < cfg.inner_steps; ++step) {
      const Eigen::MatrixXd grad = gradient(m, data, cfg.l2);
      const auto out = detail::backtracked_step(m.weights, grad,
                                                cfg.learning_rate, cur, obj_of);
      if (!out.accepted) break;
      cur = out.objective;
      if (!std::isfinite(cur)) {
        throw TrainingError("fit_vector_lr: non-finite objective at sweep " +
                            std::to_string(sweep));
      }
    }
    trace.entries.push_back({sweep, 0, cur});
    trace.sweeps_run = sweep;
    const double decrease = sweep_start - cur;
    if (decrease < cfg.rel_tol * std::max(1.0, std::abs(sweep_start))) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(m), std::move(trace)};
}

// ---- parameter accounting ----

Index tensor_lr_param_count(Index num_classes, const Shape& shape) {
  Index sum = 0;
  for (const Index p : shape) sum += p;
  return num_classes * sum;
}

Index vector_lr_param_count(Index num_classes, const Shape& shape) {
  return num_classes * shape_size(shape);
}

Index param_count(const TensorLRModel& m) {
  return tensor_lr_param_count(m.num_classes, m.input_shape);
}

Index param_count(const VectorLRModel& m) {
  return vector_lr_param_count(m.num_classes, m.input_shape);
}

}  // namespace hstc
