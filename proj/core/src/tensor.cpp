#include "hstc/tensor.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace hstc {

Index shape_size(std::span<const Index> shape) {
  Index n = 1;
  for (const Index p : shape) {
    n *= p;
  }
  return n;
}

Index vec_index(std::span<const Index> multi, std::span<const Index> shape) {
  if (multi.size() != shape.size()) {
    throw std::invalid_argument(
        "vec_index: multi-index has " + std::to_string(multi.size()) +
        " entries for an order-" + std::to_string(shape.size()) + " shape");
  }
  Index linear = 0;
  Index stride = 1;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (multi[d] < 0 || multi[d] >= shape[d]) {
      throw std::out_of_range("vec_index: index " + std::to_string(multi[d]) +
                              " out of range for mode " + std::to_string(d) +
                              " (extent " + std::to_string(shape[d]) + ")");
    }
    linear += multi[d] * stride;
    stride *= shape[d];
  }
  return linear;
}

void unvec_index(Index linear, std::span<const Index> shape,
                 std::span<Index> multi_out) {
  for (std::size_t d = 0; d < shape.size(); ++d) {
    multi_out[d] = linear % shape[d];
    linear /= shape[d];
  }
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) {
    throw std::invalid_argument("DenseTensor: empty shape");
  }
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (shape[d] < 1) {
      throw std::invalid_argument("DenseTensor: extent " +
                                  std::to_string(shape[d]) + " at mode " +
                                  std::to_string(d) + " must be positive");
    }
  }
}

}  // namespace

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = Eigen::VectorXd::Zero(shape_size(shape_));
}

DenseTensor::DenseTensor(Shape shape, Eigen::VectorXd data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw std::invalid_argument(
        "DenseTensor: buffer of length " + std::to_string(data_.size()) +
        " does not match shape product " +
        std::to_string(shape_size(shape_)));
  }
}

DenseTensor DenseTensor::constant(Shape shape, double value) {
  check_shape(shape);
  const Index n = shape_size(shape);
  return DenseTensor(std::move(shape), Eigen::VectorXd::Constant(n, value));
}

Index DenseTensor::dim(Index mode) const {
  if (mode < 0 || mode >= order()) {
    throw std::out_of_range("DenseTensor::dim: mode " + std::to_string(mode) +
                            " out of range for order " +
                            std::to_string(order()));
  }
  return shape_[static_cast<std::size_t>(mode)];
}

DenseTensor devectorize(Eigen::VectorXd data, Shape shape) {
  return DenseTensor(std::move(shape), std::move(data));
}

}  // namespace hstc
