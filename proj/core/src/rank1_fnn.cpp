#include "hstc/rank1_fnn.hpp"

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

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// Derivative g'(z) = g(z)(1 - g(z)); the pre-activation is clipped to +-35
// here (and only here) so saturated neurons keep a nonzero, denormal-free
// gradient. Forward values are never clipped.
constexpr double kPreActClip = 35.0;

double sigmoid_deriv_clipped(double z) {
  const double zc = std::clamp(z, -kPreActClip, kPreActClip);
  const double s = sigmoid(zc);
  return s * (1.0 - s);
}

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

void check_trainable(const PatchDataset& data, Index num_hidden) {
  data.validate();
  if (num_hidden < 1) {
    throw std::invalid_argument("fit: num_hidden must be >= 1");
  }
  if (data.num_classes() < 2 || data.distinct_labels() < 2) {
    throw std::invalid_argument("fit: need at least 2 classes in the data");
  }
}

}  // namespace

// ---- forward ----

Eigen::VectorXd hidden_activations(const Rank1FNNModel& m, const DenseTensor& x) {
  check_input(m.input_shape, x, "hidden_activations");
  DenseTensor scratch;
  const DenseTensor& in = maybe_scaled(m.scaling, x, scratch);
  Eigen::VectorXd u(m.num_hidden);
  for (Index i = 0; i < m.num_hidden; ++i) {
    u[i] = sigmoid(cp_inner_product(m.hidden, i, in));
  }
  return u;
}

Eigen::VectorXd hidden_activations(const DenseFNNModel& m, const DenseTensor& x) {
  check_input(m.input_shape, x, "hidden_activations");
  DenseTensor scratch;
  const DenseTensor& in = maybe_scaled(m.scaling, x, scratch);
  Eigen::VectorXd u(m.num_hidden);
  for (Index i = 0; i < m.num_hidden; ++i) {
    u[i] = sigmoid(m.hidden.row(i).dot(vectorize(in).transpose()));
  }
  return u;
}

Eigen::VectorXd forward(const Rank1FNNModel& m, const DenseTensor& x) {
  return softmax(m.output.transpose() * hidden_activations(m, x));
}

Eigen::VectorXd forward(const DenseFNNModel& m, const DenseTensor& x) {
  return softmax(m.output.transpose() * hidden_activations(m, x));
}

Index predict_class(const Rank1FNNModel& m, const DenseTensor& x) {
  return argmax_lowest_tie(forward(m, x));
}

Index predict_class(const DenseFNNModel& m, const DenseTensor& x) {
  return argmax_lowest_tie(forward(m, x));
}

// ---- objective ----

namespace {

template <typename Model>
Eigen::MatrixXd fnn_logits(const Model& m, const PatchDataset& data) {
  Eigen::MatrixXd logits(data.size(), m.num_classes);
  for (Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd u =
        hidden_activations(m, data.patches[static_cast<std::size_t>(i)]);
    logits.row(i) = (m.output.transpose() * u).transpose();
  }
  return logits;
}

}  // namespace

double nll(const Rank1FNNModel& m, const PatchDataset& data) {
  data.validate();
  return nll_from_logits(fnn_logits(m, data), data.targets);
}

double nll(const DenseFNNModel& m, const PatchDataset& data) {
  data.validate();
  return nll_from_logits(fnn_logits(m, data), data.targets);
}

double regularized_objective(const Rank1FNNModel& m, const PatchDataset& data,
                             double l2) {
  double obj = nll(m, data);
  if (l2 > 0) {
    obj += 0.5 * l2 * (factors_frob2(m.hidden) + m.output.squaredNorm());
  }
  return obj;
}

double regularized_objective(const DenseFNNModel& m, const PatchDataset& data,
                             double l2) {
  double obj = nll(m, data);
  if (l2 > 0) {
    obj += 0.5 * l2 * (m.hidden.squaredNorm() + m.output.squaredNorm());
  }
  return obj;
}

// ---- gradients ----

FNNGradients block_backprop(const Rank1FNNModel& m, const PatchDataset& data,
                            Index mode, double l2) {
  data.validate();
  if (mode < 0 || mode >= m.hidden.order()) {
    throw std::out_of_range("block_backprop: mode " + std::to_string(mode) +
                            " out of range");
  }
  const Index q = m.num_hidden;
  const Index c = m.num_classes;
  const Index p_l = m.hidden.factors[static_cast<std::size_t>(mode)].rows();

  FNNGradients g;
  g.hidden = Eigen::MatrixXd::Zero(p_l, q);
  g.output = Eigen::MatrixXd::Zero(q, c);
  DenseTensor scratch;
  for (Index s = 0; s < data.size(); ++s) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(s)], scratch);
    Eigen::VectorXd z(q);
    for (Index i = 0; i < q; ++i) {
      z[i] = cp_inner_product(m.hidden, i, x);
    }
    const Eigen::VectorXd u = z.unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd p = softmax(m.output.transpose() * u);
    const Eigen::VectorXd delta = p - data.targets.row(s).transpose();
    g.output += u * delta.transpose();
    const Eigen::VectorXd back = m.output * delta;  // dL/du
    for (Index i = 0; i < q; ++i) {
      const double pre = back[i] * sigmoid_deriv_clipped(z[i]);
      // tau is independent of the mode-l factor, so this block is exact.
      g.hidden.col(i) += pre * transformed_input(x, m.hidden, i, mode);
    }
  }
  if (l2 > 0) {
    g.hidden += l2 * m.hidden.factors[static_cast<std::size_t>(mode)];
    g.output += l2 * m.output;
  }
  return g;
}

FNNGradients backprop(const DenseFNNModel& m, const PatchDataset& data,
                      double l2) {
  data.validate();
  const Index q = m.num_hidden;
  const Index c = m.num_classes;

  FNNGradients g;
  g.hidden = Eigen::MatrixXd::Zero(q, m.hidden.cols());
  g.output = Eigen::MatrixXd::Zero(q, c);
  DenseTensor scratch;
  for (Index s = 0; s < data.size(); ++s) {
    const DenseTensor& x =
        maybe_scaled(m.scaling, data.patches[static_cast<std::size_t>(s)], scratch);
    const Eigen::VectorXd& v = vectorize(x);
    const Eigen::VectorXd z = m.hidden * v;
    const Eigen::VectorXd u = z.unaryExpr([](double w) { return sigmoid(w); });
    const Eigen::VectorXd p = softmax(m.output.transpose() * u);
    const Eigen::VectorXd delta = p - data.targets.row(s).transpose();
    g.output += u * delta.transpose();
    const Eigen::VectorXd back = m.output * delta;
    for (Index i = 0; i < q; ++i) {
      g.hidden.row(i) +=
          back[i] * sigmoid_deriv_clipped(z[i]) * v.transpose();
    }
  }
  if (l2 > 0) {
    g.hidden += l2 * m.hidden;
    g.output += l2 * m.output;
  }
  return g;
}

// ---- training ----

FitResult<Rank1FNNModel> fit_rank1_fnn(const PatchDataset& data,
                                       const TrainConfig& cfg,
                                       Index num_hidden) {
  cfg.validate();
  check_trainable(data, num_hidden);
  const Shape shape = data.patch_shape();
  const Index num_modes = static_cast<Index>(shape.size());
  const Index q = num_hidden;
  const Index c = data.num_classes();
  const Index n = data.size();

  Rank1FNNModel m;
  m.num_hidden = q;
  m.num_classes = c;
  m.input_shape = shape;
  Rng rng(cfg.seed);
  for (const Index p : shape) {
    m.hidden.factors.push_back(
        uniform_matrix(rng, p, q, cfg.init_scale / std::sqrt(double(p))));
  }
  m.output = uniform_matrix(rng, q, c, cfg.init_scale / std::sqrt(double(q)));

  // Cached per-sample state; refreshed from the weights after every block.
  Eigen::MatrixXd pre(n, q);      // pre-activations
  Eigen::MatrixXd act(n, q);      // sigmoid(pre)
  Eigen::MatrixXd logits(n, c);   // act * V
  double cur_obj = 0.0;

  const auto reg_term = [&](double h_frob2, double out_frob2) {
    return cfg.l2 > 0 ? 0.5 * cfg.l2 * (h_frob2 + out_frob2) : 0.0;
  };
  const auto refresh = [&]() {
    for (Index s = 0; s < n; ++s) {
      for (Index i = 0; i < q; ++i) {
        pre(s, i) = cp_inner_product(m.hidden, i,
                                     data.patches[static_cast<std::size_t>(s)]);
      }
    }
    act = pre.unaryExpr([](double v) { return sigmoid(v); });
    logits = act * m.output;
    cur_obj = nll_from_logits(logits, data.targets) +
              reg_term(factors_frob2(m.hidden), m.output.squaredNorm());
  };
  refresh();

  TrainTrace trace;
  trace.entries.push_back({0, -1, cur_obj});

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double sweep_start = cur_obj;
    for (Index l = 0; l < num_modes; ++l) {
      Eigen::MatrixXd& w_l = m.hidden.factors[static_cast<std::size_t>(l)];
      for (Index i = 0; i < q; ++i) {
        // tau rows are fixed while neuron i's mode-l column moves
        Eigen::MatrixXd tau(n, w_l.rows());
        for (Index s = 0; s < n; ++s) {
          tau.row(s) = transformed_input(
              data.patches[static_cast<std::size_t>(s)], m.hidden, i, l);
        }

        // exact gradient for this column at the current parameters
        Eigen::MatrixXd probs(n, c);
        for (Index s = 0; s < n; ++s) {
          probs.row(s) = softmax(logits.row(s).transpose()).transpose();
        }
        const Eigen::MatrixXd delta = probs - data.targets;
        const Eigen::VectorXd back = delta * m.output.row(i).transpose();
        Eigen::VectorXd sens(n);
        for (Index s = 0; s < n; ++s) {
          sens[s] = back[s] * sigmoid_deriv_clipped(pre(s, i));
        }
        Eigen::VectorXd grad = tau.transpose() * sens;
        if (cfg.l2 > 0) grad += cfg.l2 * w_l.col(i);

        const double old_col2 = w_l.col(i).squaredNorm();
        Eigen::VectorXd col = w_l.col(i);
        Eigen::VectorXd new_pre_col, new_act_col;
        Eigen::MatrixXd new_logits;
        const auto obj_of = [&](const Eigen::VectorXd& cand) {
          new_pre_col = tau * cand;
          new_act_col =
              new_pre_col.unaryExpr([](double v) { return sigmoid(v); });
          new_logits =
              logits + (new_act_col - act.col(i)) * m.output.row(i);
          const double h2 =
              factors_frob2(m.hidden) - old_col2 + cand.squaredNorm();
          return nll_from_logits(new_logits, data.targets) +
                 reg_term(h2, m.output.squaredNorm());
        };
        const auto out = detail::backtracked_step(col, grad, cfg.learning_rate,
                                                  cur_obj, obj_of);
        if (out.accepted) {
          // obj_of left the caches for the accepted candidate in place
          w_l.col(i) = col;
          pre.col(i) = new_pre_col;
          act.col(i) = new_act_col;
          logits = std::move(new_logits);
          cur_obj = out.objective;
          if (!std::isfinite(cur_obj)) {
            throw TrainingError("fit_rank1_fnn: non-finite loss at sweep " +
                                std::to_string(sweep) + ", block " +
                                std::to_string(l));
          }
        }
      }
      refresh();  // drop accumulated round-off before recording
      trace.entries.push_back({sweep, static_cast<int>(l), cur_obj});
      if (!std::isfinite(cur_obj)) {
        throw TrainingError("fit_rank1_fnn: non-finite loss at sweep " +
                            std::to_string(sweep) + ", block " +
                            std::to_string(l));
      }
    }

    // hidden-to-output columns, one backtracked step each
    for (Index k = 0; k < c; ++k) {
      Eigen::MatrixXd probs(n, c);
      for (Index s = 0; s < n; ++s) {
        probs.row(s) = softmax(logits.row(s).transpose()).transpose();
      }
      const Eigen::MatrixXd delta = probs - data.targets;
      Eigen::VectorXd grad = act.transpose() * delta.col(k);
      if (cfg.l2 > 0) grad += cfg.l2 * m.output.col(k);

      const double old_col2 = m.output.col(k).squaredNorm();
      Eigen::VectorXd col = m.output.col(k);
      Eigen::VectorXd new_logit_col;
      const auto obj_of = [&](const Eigen::VectorXd& cand) {
        new_logit_col = act * cand;
        Eigen::MatrixXd cand_logits = logits;
        cand_logits.col(k) = new_logit_col;
        const double o2 =
            m.output.squaredNorm() - old_col2 + cand.squaredNorm();
        return nll_from_logits(cand_logits, data.targets) +
               reg_term(factors_frob2(m.hidden), o2);
      };
      const auto out = detail::backtracked_step(col, grad, cfg.learning_rate,
                                                cur_obj, obj_of);
      if (out.accepted) {
        m.output.col(k) = col;
        logits.col(k) = new_logit_col;
        cur_obj = out.objective;
        if (!std::isfinite(cur_obj)) {
          throw TrainingError("fit_rank1_fnn: non-finite loss at sweep " +
                              std::to_string(sweep) + ", output block");
        }
      }
    }
    refresh();
    trace.entries.push_back({sweep, static_cast<int>(num_modes), cur_obj});

    renormalize(m.hidden);
    refresh();
    trace.sweeps_run = sweep;
    const double decrease = sweep_start - cur_obj;
    if (decrease < cfg.rel_tol * std::max(1.0, std::abs(sweep_start))) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(m), std::move(trace)};
}

FitResult<DenseFNNModel> fit_dense_fnn(const PatchDataset& data,
                                       const TrainConfig& cfg,
                                       Index num_hidden) {
  cfg.validate();
  check_trainable(data, num_hidden);
  const Shape shape = data.patch_shape();
  const Index dim = shape_size(shape);
  const Index q = num_hidden;
  const Index c = data.num_classes();
  const Index n = data.size();

  DenseFNNModel m;
  m.num_hidden = q;
  m.num_classes = c;
  m.input_shape = shape;
  Rng rng(cfg.seed);
  // drawn neuron by neuron (column-major on the transposed layout), so a
  // rank-1 fit at D = 1 with the same seed starts from identical weights
  Eigen::MatrixXd hidden_t =
      uniform_matrix(rng, dim, q, cfg.init_scale / std::sqrt(double(dim)));
  m.output = uniform_matrix(rng, q, c, cfg.init_scale / std::sqrt(double(q)));

  Eigen::MatrixXd inputs(n, dim);
  for (Index s = 0; s < n; ++s) {
    inputs.row(s) = vectorize(data.patches[static_cast<std::size_t>(s)]);
  }

  Eigen::MatrixXd pre(n, q);
  Eigen::MatrixXd act(n, q);
  Eigen::MatrixXd logits(n, c);
  double cur_obj = 0.0;

  const auto reg_term = [&](double h_frob2, double out_frob2) {
    return cfg.l2 > 0 ? 0.5 * cfg.l2 * (h_frob2 + out_frob2) : 0.0;
  };
  const auto refresh = [&]() {
    Eigen::VectorXd xi(dim);
    for (Index s = 0; s < n; ++s) {
      xi = inputs.row(s);
      for (Index i = 0; i < q; ++i) {
        pre(s, i) = hidden_t.col(i).dot(xi);
      }
    }
    act = pre.unaryExpr([](double v) { return sigmoid(v); });
    logits = act * m.output;
    cur_obj = nll_from_logits(logits, data.targets) +
              reg_term(hidden_t.squaredNorm(), m.output.squaredNorm());
  };
  refresh();

  TrainTrace trace;
  trace.entries.push_back({0, -1, cur_obj});

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double sweep_start = cur_obj;
    for (Index i = 0; i < q; ++i) {
      Eigen::MatrixXd probs(n, c);
      for (Index s = 0; s < n; ++s) {
        probs.row(s) = softmax(logits.row(s).transpose()).transpose();
      }
      const Eigen::MatrixXd delta = probs - data.targets;
      const Eigen::VectorXd back = delta * m.output.row(i).transpose();
      Eigen::VectorXd sens(n);
      for (Index s = 0; s < n; ++s) {
        sens[s] = back[s] * sigmoid_deriv_clipped(pre(s, i));
      }
      Eigen::VectorXd grad = inputs.transpose() * sens;
      if (cfg.l2 > 0) grad += cfg.l2 * hidden_t.col(i);

      const double old_col2 = hidden_t.col(i).squaredNorm();
      Eigen::VectorXd col = hidden_t.col(i);
      Eigen::VectorXd new_pre_col, new_act_col;
      Eigen::MatrixXd new_logits;
      const auto obj_of = [&](const Eigen::VectorXd& cand) {
        new_pre_col = inputs * cand;
        new_act_col =
            new_pre_col.unaryExpr([](double v) { return sigmoid(v); });
        new_logits = logits + (new_act_col - act.col(i)) * m.output.row(i);
        const double h2 =
            hidden_t.squaredNorm() - old_col2 + cand.squaredNorm();
        return nll_from_logits(new_logits, data.targets) +
               reg_term(h2, m.output.squaredNorm());
      };
      const auto out = detail::backtracked_step(col, grad, cfg.learning_rate,
                                                cur_obj, obj_of);
      if (out.accepted) {
        hidden_t.col(i) = col;
        pre.col(i) = new_pre_col;
        act.col(i) = new_act_col;
        logits = std::move(new_logits);
        cur_obj = out.objective;
        if (!std::isfinite(cur_obj)) {
          throw TrainingError("fit_dense_fnn: non-finite loss at sweep " +
                              std::to_string(sweep));
        }
      }
    }
    refresh();
    trace.entries.push_back({sweep, 0, cur_obj});

    for (Index k = 0; k < c; ++k) {
      Eigen::MatrixXd probs(n, c);
      for (Index s = 0; s < n; ++s) {
        probs.row(s) = softmax(logits.row(s).transpose()).transpose();
      }
      const Eigen::MatrixXd delta = probs - data.targets;
      Eigen::VectorXd grad = act.transpose() * delta.col(k);
      if (cfg.l2 > 0) grad += cfg.l2 * m.output.col(k);

      const double old_col2 = m.output.col(k).squaredNorm();
      Eigen::VectorXd col = m.output.col(k);
      Eigen::VectorXd new_logit_col;
      const auto obj_of = [&](const Eigen::VectorXd& cand) {
        new_logit_col = act * cand;
        Eigen::MatrixXd cand_logits = logits;
        cand_logits.col(k) = new_logit_col;
        const double o2 =
            m.output.squaredNorm() - old_col2 + cand.squaredNorm();
        return nll_from_logits(cand_logits, data.targets) +
               reg_term(hidden_t.squaredNorm(), o2);
      };
      const auto out = detail::backtracked_step(col, grad, cfg.learning_rate,
                                                cur_obj, obj_of);
      if (out.accepted) {
        m.output.col(k) = col;
        logits.col(k) = new_logit_col;
        cur_obj = out.objective;
        if (!std::isfinite(cur_obj)) {
          throw TrainingError("fit_dense_fnn: non-finite loss at sweep " +
                              std::to_string(sweep) + ", output block");
        }
      }
    }
    refresh();
    trace.entries.push_back({sweep, 1, cur_obj});

    trace.sweeps_run = sweep;
    const double decrease = sweep_start - cur_obj;
    if (decrease < cfg.rel_tol * std::max(1.0, std::abs(sweep_start))) {
      trace.converged = true;
      break;
    }
  }
  m.hidden = hidden_t.transpose();
  return {std::move(m), std::move(trace)};
}

// ---- parameter accounting ----

Index rank1_fnn_param_count(Index num_hidden, const Shape& shape,
                            Index num_classes) {
  Index sum = 0;
  for (const Index p : shape) sum += p;
  return num_hidden * sum + num_hidden * num_classes;
}

Index dense_fnn_param_count(Index num_hidden, const Shape& shape,
                            Index num_classes) {
  return num_hidden * shape_size(shape) + num_hidden * num_classes;
}

Index param_count(const Rank1FNNModel& m) {
  return rank1_fnn_param_count(m.num_hidden, m.input_shape, m.num_classes);
}

Index param_count(const DenseFNNModel& m) {
  return dense_fnn_param_count(m.num_hidden, m.input_shape, m.num_classes);
}

}  // namespace hstc
