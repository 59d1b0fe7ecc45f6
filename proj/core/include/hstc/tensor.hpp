#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace hstc {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Number of elements of a dense tensor with the given extents.
Index shape_size(std::span<const Index> shape);

/// Flat position of a multi-index in first-index-fastest order: for shape
/// (p1..pD) the element (i1..iD) lands at i1 + p1*i2 + p1*p2*i3 + ...
/// All indices 0-based. Throws std::out_of_range naming the offending mode.
Index vec_index(std::span<const Index> multi, std::span<const Index> shape);

/// Inverse of vec_index; multi_out must have shape.size() entries.
void unvec_index(Index linear, std::span<const Index> shape,
                 std::span<Index> multi_out);

/// Dense real D-dimensional array with explicit shape and a flat 64-bit
/// buffer in first-index-fastest order (a matrix is stored column-major,
/// so vectorization is a no-copy view of the buffer).
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);  // zero-filled
  DenseTensor(Shape shape, Eigen::VectorXd data);

  static DenseTensor constant(Shape shape, double value);

  Index order() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index mode) const;
  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }

  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  double at(std::span<const Index> multi) const {
    return data_[vec_index(multi, shape_)];
  }
  double& at(std::span<const Index> multi) {
    return data_[vec_index(multi, shape_)];
  }

  template <typename... I>
  double operator()(I... idx) const {
    const std::array<Index, sizeof...(I)> multi{static_cast<Index>(idx)...};
    return at(multi);
  }
  template <typename... I>
  double& operator()(I... idx) {
    const std::array<Index, sizeof...(I)> multi{static_cast<Index>(idx)...};
    return at(multi);
  }

  bool same_shape(const DenseTensor& other) const {
    return shape_ == other.shape_;
  }
  bool all_finite() const { return data_.allFinite(); }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

/// Stacks tensor entries into a vector (identity on the internal buffer).
inline const Eigen::VectorXd& vectorize(const DenseTensor& t) {
  return t.data();
}

/// Rebuilds a tensor of the given shape from its vectorized form.
DenseTensor devectorize(Eigen::VectorXd data, Shape shape);

}  // namespace hstc
