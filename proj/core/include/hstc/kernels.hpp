#pragma once

#include <Eigen/Dense>

#include <vector>

#include "hstc/tensor.hpp"

namespace hstc {

/// Kronecker product: block (i,j) of the mp x nq result equals a(i,j)*B.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Khatri-Rao product (columnwise Kronecker). Column counts must match.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// mats[D-1] (.) ... (.) mats[0], i.e. the chain in descending mode order
/// so that column k equals the vectorized rank-1 term of the k-th columns.
Eigen::MatrixXd khatri_rao_chain(const std::vector<Eigen::MatrixXd>& mats);

/// Mode-d unfolding: entry (i1..iD) lands at row i_d, column
/// sum_{d' != d} i_{d'} * prod_{d'' < d', d'' != d} p_{d''}.
Eigen::MatrixXd matricize(const DenseTensor& t, Index mode);

/// Inverse of matricize for the given shape.
DenseTensor refold(const Eigen::MatrixXd& m, Index mode, const Shape& shape);

/// Tensor whose (i1..iD) entry is the product vectors[0][i1] * ... *
/// vectors[D-1][iD].
DenseTensor outer_product(const std::vector<Eigen::VectorXd>& vectors);

}  // namespace hstc
