#include <benchmark/benchmark.h>

#include <vector>

#include "hstc/cp.hpp"
#include "hstc/kernels.hpp"
#include "hstc/linear_model.hpp"
#include "hstc/rng.hpp"

namespace {

using namespace hstc;

// Pavia-like patch geometry: 5x5 window over 103 bands.
const Shape kPatchShape{5, 5, 103};

DenseTensor random_tensor(Rng& rng, const Shape& shape) {
  DenseTensor t(shape);
  for (Index j = 0; j < t.size(); ++j) {
    t.data()[j] = rng.uniform(-1.0, 1.0);
  }
  return t;
}

CPFactorSet random_factors(Rng& rng, const Shape& shape, Index columns) {
  CPFactorSet f;
  for (const Index p : shape) {
    f.factors.push_back(uniform_matrix(rng, p, columns, 1.0));
  }
  return f;
}

void BM_cp_inner_product(benchmark::State& state) {
  Rng rng(1);
  const CPFactorSet f = random_factors(rng, kPatchShape, 9);
  const DenseTensor x = random_tensor(rng, kPatchShape);
  Index k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp_inner_product(f, k, x));
    k = (k + 1) % 9;
  }
}
BENCHMARK(BM_cp_inner_product);

void BM_naive_kronecker_inner(benchmark::State& state) {
  Rng rng(1);
  const CPFactorSet f = random_factors(rng, kPatchShape, 9);
  const DenseTensor x = random_tensor(rng, kPatchShape);
  Index k = 0;
  for (auto _ : state) {
    // materialize w_D (x) ... (x) w_1 and take the dense dot product
    Eigen::MatrixXd full = f.factors[0].col(k);
    for (std::size_t d = 1; d < f.factors.size(); ++d) {
      full = kronecker(f.factors[d].col(k), full);
    }
    benchmark::DoNotOptimize(full.col(0).dot(vectorize(x)));
    k = (k + 1) % 9;
  }
}
BENCHMARK(BM_naive_kronecker_inner);

void BM_transformed_input(benchmark::State& state) {
  Rng rng(2);
  const CPFactorSet f = random_factors(rng, kPatchShape, 9);
  const DenseTensor x = random_tensor(rng, kPatchShape);
  const Index mode = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transformed_input(x, f, 0, mode));
  }
}
BENCHMARK(BM_transformed_input)->Arg(0)->Arg(2);

void BM_matricize(benchmark::State& state) {
  Rng rng(3);
  const DenseTensor x = random_tensor(rng, kPatchShape);
  const Index mode = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matricize(x, mode));
  }
}
BENCHMARK(BM_matricize)->Arg(0)->Arg(2);

void BM_khatri_rao(benchmark::State& state) {
  Rng rng(4);
  const Eigen::MatrixXd a = uniform_matrix(rng, state.range(0), 9, 1.0);
  const Eigen::MatrixXd b = uniform_matrix(rng, 25, 9, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(khatri_rao(a, b));
  }
}
BENCHMARK(BM_khatri_rao)->Arg(103);

void BM_block_gradient(benchmark::State& state) {
  Rng rng(5);
  TensorLRModel m;
  m.num_classes = 3;
  m.input_shape = kPatchShape;
  for (const Index p : kPatchShape) {
    m.weights.factors.push_back(uniform_matrix(rng, p, 3, 0.1));
  }
  std::vector<DenseTensor> xs;
  std::vector<Index> ys;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(random_tensor(rng, kPatchShape));
    ys.push_back(static_cast<Index>(rng.below(3)));
  }
  const PatchDataset data = dataset_from_labels(std::move(xs), ys, 3);
  const Index mode = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(block_gradient(m, data, mode, 0.0));
  }
}
BENCHMARK(BM_block_gradient)->Arg(0)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
