#include "hstc/kernels.hpp"

#include <stdexcept>
#include <string>

namespace hstc {

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()) + ")");
  }
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
  for (Index k = 0; k < a.cols(); ++k) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
    }
  }
  return out;
}

Eigen::MatrixXd khatri_rao_chain(const std::vector<Eigen::MatrixXd>& mats) {
  if (mats.empty()) {
    throw std::invalid_argument("khatri_rao_chain: empty factor list");
  }
  Eigen::MatrixXd acc = mats.front();
  for (std::size_t d = 1; d < mats.size(); ++d) {
    acc = khatri_rao(mats[d], acc);  // higher modes accumulate on the left
  }
  return acc;
}

namespace {

void check_mode(const DenseTensor& t, Index mode, const char* who) {
  if (mode < 0 || mode >= t.order()) {
    throw std::out_of_range(std::string(who) + ": mode " +
                            std::to_string(mode) + " out of range for order " +
                            std::to_string(t.order()));
  }
}

}  // namespace

Eigen::MatrixXd matricize(const DenseTensor& t, Index mode) {
  check_mode(t, mode, "matricize");
  const Shape& shape = t.shape();
  const std::size_t d_mode = static_cast<std::size_t>(mode);
  const Index rows = shape[d_mode];
  const Index cols = t.size() / rows;

  Eigen::MatrixXd out(rows, cols);
  Shape multi(shape.size(), 0);
  for (Index lin = 0; lin < t.size(); ++lin) {
    unvec_index(lin, shape, multi);
    Index col = 0;
    Index stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == d_mode) continue;
      col += multi[d] * stride;
      stride *= shape[d];
    }
    out(multi[d_mode], col) = t.data()[lin];
  }
  return out;
}

DenseTensor refold(const Eigen::MatrixXd& m, Index mode, const Shape& shape) {
  DenseTensor out(shape);
  check_mode(out, mode, "refold");
  const std::size_t d_mode = static_cast<std::size_t>(mode);
  if (m.rows() != shape[d_mode] || m.cols() != out.size() / shape[d_mode]) {
    throw std::invalid_argument("refold: matrix is " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()) +
                                ", incompatible with the target shape");
  }
  Shape multi(shape.size(), 0);
  for (Index lin = 0; lin < out.size(); ++lin) {
    unvec_index(lin, shape, multi);
    Index col = 0;
    Index stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == d_mode) continue;
      col += multi[d] * stride;
      stride *= shape[d];
    }
    out.data()[lin] = m(multi[d_mode], col);
  }
  return out;
}

DenseTensor outer_product(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("outer_product: no vectors given");
  }
  Shape shape;
  shape.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() == 0) {
      throw std::invalid_argument("outer_product: empty vector");
    }
    shape.push_back(v.size());
  }
  DenseTensor out(shape);
  Shape multi(shape.size(), 0);
  for (Index lin = 0; lin < out.size(); ++lin) {
    unvec_index(lin, shape, multi);
    double prod = 1.0;
    for (std::size_t d = 0; d < vectors.size(); ++d) {
      prod *= vectors[d][multi[d]];
    }
    out.data()[lin] = prod;
  }
  return out;
}

}  // namespace hstc
