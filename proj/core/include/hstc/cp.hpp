#pragma once

#include <Eigen/Dense>

#include <vector>

#include "hstc/tensor.hpp"

namespace hstc {

/// Bank of canonically decomposed weights: D factor matrices of p_l x K,
/// column k across all factors defining one rank-1 tensor
/// w^{(k)} = factors[D-1].col(k) o ... o factors[0].col(k).
struct CPFactorSet {
  std::vector<Eigen::MatrixXd> factors;

  Index order() const { return static_cast<Index>(factors.size()); }
  Index columns() const;  // shared column count K
  Shape row_dims() const;

  /// Checks the shared-column-count invariant; throws std::invalid_argument.
  void validate() const;
};

/// Sum over columns of the rank-1 outer products (rank-K reconstruction).
DenseTensor cp_reconstruct(const CPFactorSet& f);

/// <w_D (.) ... (.) w_1, vec(x)> for factor column k, evaluated by
/// contracting x against one factor vector per mode; the full Kronecker
/// vector is never materialized.
double cp_inner_product(const CPFactorSet& f, Index column,
                        const DenseTensor& x);

/// Same value routed through the mode-l transformed input; the result is
/// independent of the chosen mode.
double cp_inner_product(const CPFactorSet& f, Index column,
                        const DenseTensor& x, Index mode);

/// Transformed input tau: X_(l) times the Khatri-Rao chain of all factor-k
/// columns except mode l. Satisfies <w_l, tau> = cp_inner_product.
/// For order-1 tensors the empty chain is the scalar 1, so tau = vec(x).
Eigen::VectorXd transformed_input(const DenseTensor& x, const CPFactorSet& f,
                                  Index column, Index mode);

}  // namespace hstc
