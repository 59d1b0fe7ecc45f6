#include "hstc/cp.hpp"

#include <stdexcept>
#include <string>

#include "hstc/kernels.hpp"

namespace hstc {

Index CPFactorSet::columns() const {
  if (factors.empty()) {
    throw std::invalid_argument("CPFactorSet: no factors");
  }
  return factors.front().cols();
}

Shape CPFactorSet::row_dims() const {
  Shape dims;
  dims.reserve(factors.size());
  for (const auto& f : factors) {
    dims.push_back(f.rows());
  }
  return dims;
}

void CPFactorSet::validate() const {
  if (factors.empty()) {
    throw std::invalid_argument("CPFactorSet: no factors");
  }
  const Index k = factors.front().cols();
  for (std::size_t l = 0; l < factors.size(); ++l) {
    if (factors[l].rows() < 1) {
      throw std::invalid_argument("CPFactorSet: factor " + std::to_string(l) +
                                  " has no rows");
    }
    if (factors[l].cols() != k) {
      throw std::invalid_argument(
          "CPFactorSet: factor " + std::to_string(l) + " has " +
          std::to_string(factors[l].cols()) + " columns, expected " +
          std::to_string(k));
    }
  }
}

namespace {

void check_args(const CPFactorSet& f, Index column, const DenseTensor& x,
                const char* who) {
  if (column < 0 || column >= f.columns()) {
    throw std::out_of_range(std::string(who) + ": column " +
                            std::to_string(column) + " out of range for K = " +
                            std::to_string(f.columns()));
  }
  if (f.order() != x.order()) {
    throw std::invalid_argument(std::string(who) + ": factor set is order " +
                                std::to_string(f.order()) + ", tensor order " +
                                std::to_string(x.order()));
  }
  for (Index d = 0; d < x.order(); ++d) {
    if (f.factors[static_cast<std::size_t>(d)].rows() != x.dim(d)) {
      throw std::invalid_argument(
          std::string(who) + ": factor " + std::to_string(d) + " has " +
          std::to_string(f.factors[static_cast<std::size_t>(d)].rows()) +
          " rows, tensor extent is " + std::to_string(x.dim(d)));
    }
  }
}

// Contracts x against factor column `column` of every mode except `keep`,
// by repeated matrix-vector products on the flat buffer: trailing modes are
// folded off first (each is the column block of the remaining buffer), then
// leading modes (each is the fastest-varying axis).
Eigen::VectorXd contract_all_but(const DenseTensor& x, const CPFactorSet& f,
                                 Index column, Index keep) {
  Eigen::VectorXd buf = x.data();
  const Shape& dims = x.shape();
  for (Index d = x.order() - 1; d > keep; --d) {
    const Index extent = dims[static_cast<std::size_t>(d)];
    const Index rest = buf.size() / extent;
    Eigen::Map<const Eigen::MatrixXd> m(buf.data(), rest, extent);
    Eigen::VectorXd next =
        m * f.factors[static_cast<std::size_t>(d)].col(column);
    buf = std::move(next);
  }
  for (Index d = 0; d < keep; ++d) {
    const Index extent = dims[static_cast<std::size_t>(d)];
    const Index rest = buf.size() / extent;
    Eigen::Map<const Eigen::MatrixXd> m(buf.data(), extent, rest);
    Eigen::VectorXd next =
        m.transpose() * f.factors[static_cast<std::size_t>(d)].col(column);
    buf = std::move(next);
  }
  return buf;
}

}  // namespace

DenseTensor cp_reconstruct(const CPFactorSet& f) {
  f.validate();
  DenseTensor out(f.row_dims());
  std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(f.order()));
  for (Index k = 0; k < f.columns(); ++k) {
    for (std::size_t l = 0; l < cols.size(); ++l) {
      cols[l] = f.factors[l].col(k);
    }
    out.data() += outer_product(cols).data();
  }
  return out;
}

double cp_inner_product(const CPFactorSet& f, Index column,
                        const DenseTensor& x) {
  check_args(f, column, x, "cp_inner_product");
  const Eigen::VectorXd tau = contract_all_but(x, f, column, 0);
  return f.factors.front().col(column).dot(tau);
}

double cp_inner_product(const CPFactorSet& f, Index column,
                        const DenseTensor& x, Index mode) {
  const Eigen::VectorXd tau = transformed_input(x, f, column, mode);
  return f.factors[static_cast<std::size_t>(mode)].col(column).dot(tau);
}

Eigen::VectorXd transformed_input(const DenseTensor& x, const CPFactorSet& f,
                                  Index column, Index mode) {
  check_args(f, column, x, "transformed_input");
  if (mode < 0 || mode >= x.order()) {
    throw std::out_of_range("transformed_input: mode " + std::to_string(mode) +
                            " out of range for order " +
                            std::to_string(x.order()));
  }
  return contract_all_but(x, f, column, mode);
}

}  // namespace hstc
