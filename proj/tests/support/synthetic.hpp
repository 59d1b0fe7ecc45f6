#pragma once

// Planted-signal task generators shared by the unit and acceptance suites.

#include <cstdint>
#include <utility>

#include "hstc/cp.hpp"
#include "hstc/dataset.hpp"
#include "hstc/hypercube.hpp"
#include "hstc/tensor.hpp"

namespace hstc::testing {

struct LabeledSplit {
  PatchDataset train;
  PatchDataset test;
};

/// Rank-1-separable classification data: class means are near-orthogonal
/// unit rank-1 tensors and samples are means plus isotropic Gaussian noise,
/// labeled by the planted weight bank's own argmax (so the planted model
/// classifies every sample perfectly). The training split is class-balanced.
LabeledSplit planted_rank1_task(std::uint64_t seed, const Shape& shape,
                                Index num_classes, Index n_train, Index n_test,
                                double noise_sigma = 0.35);

/// XOR-style task: class = parity of the signs of two planted rank-1
/// projections, which no linear decision rule can recover.
LabeledSplit xor_parity_task(std::uint64_t seed, const Shape& shape,
                             Index n_train, Index n_test);

/// Hyperspectral fixture with class information carried only by the two
/// `informative` bands (0-based); every other band is pure noise. About 10%
/// of the pixels are left unlabeled.
struct PlantedCube {
  HyperCube cube;
  LabelMap labels;
  std::vector<Index> informative;
};

PlantedCube planted_band_cube(std::uint64_t seed, Index height, Index width,
                              Index bands, Index num_classes,
                              std::vector<Index> informative,
                              double strength = 2.5);

}  // namespace hstc::testing
