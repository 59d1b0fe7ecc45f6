#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "hstc/dataset.hpp"
#include "hstc/tensor.hpp"

namespace hstc {

/// Hyperspectral image as an H x W x B tensor (row, column, band).
struct HyperCube {
  Index height = 0;
  Index width = 0;
  Index bands = 0;
  DenseTensor values;  // shape (H, W, B)

  HyperCube() = default;
  explicit HyperCube(DenseTensor cube);  // shape must be 3-D

  double at(Index row, Index col, Index band) const {
    return values(row, col, band);
  }
};

/// H x W grid of class ids; 0 marks unlabeled pixels, classes are 1..C.
struct LabelMap {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint16_t> ids;  // row-major

  std::uint16_t at(Index row, Index col) const {
    return ids[static_cast<std::size_t>(row * width + col)];
  }
  std::uint16_t& at(Index row, Index col) {
    return ids[static_cast<std::size_t>(row * width + col)];
  }
  /// Largest class id present (the class count C).
  Index max_class() const;
};

// ---- on-disk formats ----
//
// Cube: JSON sidecar <base>.json
//   {"magic":"HSTC1","height":H,"width":W,"bands":B,
//    "dtype":"f32","order":"bsq","endianness":"little"}
// plus payload <base>.raw holding B contiguous H x W planes, row-major
// within each plane, 32-bit little-endian floats (widened to double in
// memory). Labels: <base>.labels.raw, H x W row-major uint16 little-endian.

/// Accepts the base path or the .json sidecar path. Throws FormatError on
/// bad magic/fields or payload size mismatch (expected/actual byte counts).
HyperCube load_cube(const std::filesystem::path& path);
void save_cube(const std::filesystem::path& base, const HyperCube& cube);

LabelMap load_labels(const std::filesystem::path& path, Index height,
                     Index width);
void save_labels(const std::filesystem::path& path, const LabelMap& labels);

/// Label path convention for a cube base path: <base>.labels.raw.
std::filesystem::path labels_path_for(const std::filesystem::path& cube_path);

/// window x window x B patch centered at (row, col); positions outside the
/// image are zero-filled. window must be odd.
DenseTensor extract_patch(const HyperCube& cube, Index row, Index col,
                          Index window);

/// Per-class pixel selection: n_per_class random picks without replacement
/// when a class has at least n_per_class labeled pixels, otherwise 50%
/// (floor) of them. Classes with no pixels are skipped with a warning on
/// stderr. Deterministic given seed; coords are in row-major scan order.
struct SplitIndices {
  std::vector<std::pair<Index, Index>> train_coords;
  std::vector<std::pair<Index, Index>> test_coords;
};

SplitIndices split_per_class_indices(const LabelMap& labels,
                                     Index n_per_class, std::uint64_t seed);

/// Materializes train/test patch datasets from the per-class split.
std::pair<PatchDataset, PatchDataset> split_per_class(const HyperCube& cube,
                                                      const LabelMap& labels,
                                                      Index n_per_class,
                                                      std::uint64_t seed,
                                                      Index window = 5);

/// Builds a dataset from explicit pixel coords (labels looked up per pixel).
PatchDataset make_patch_dataset(const HyperCube& cube, const LabelMap& labels,
                                const std::vector<std::pair<Index, Index>>& coords,
                                Index window, std::string split_tag);

}  // namespace hstc
