#include "hstc/hypercube.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "hstc/errors.hpp"
#include "hstc/rng.hpp"

namespace hstc {

namespace {

using nlohmann::json;

std::filesystem::path base_path(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::filesystem::path p = path;
    p.replace_extension();
    return p;
  }
  return path;
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return bytes;
}

float f32_from_le(const unsigned char* p) {
  const std::uint32_t u = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                          std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
  return std::bit_cast<float>(u);
}

void f32_to_le(float v, unsigned char* p) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(u);
  p[1] = static_cast<unsigned char>(u >> 8);
  p[2] = static_cast<unsigned char>(u >> 16);
  p[3] = static_cast<unsigned char>(u >> 24);
}

}  // namespace

HyperCube::HyperCube(DenseTensor cube) {
  if (cube.order() != 3) {
    throw std::invalid_argument("HyperCube: tensor must be H x W x B");
  }
  height = cube.dim(0);
  width = cube.dim(1);
  bands = cube.dim(2);
  values = std::move(cube);
}

Index LabelMap::max_class() const {
  std::uint16_t m = 0;
  for (const std::uint16_t id : ids) m = std::max(m, id);
  return static_cast<Index>(m);
}

HyperCube load_cube(const std::filesystem::path& path) {
  const auto base = base_path(path);
  const auto header_path = base.string() + ".json";
  const auto payload_path = base.string() + ".raw";

  std::ifstream hin(header_path);
  if (!hin) {
    throw FormatError("cannot open cube header " + header_path);
  }
  json header;
  try {
    hin >> header;
  } catch (const json::exception& e) {
    throw FormatError("cube header " + header_path + ": " + e.what());
  }

  const auto require_string = [&](const char* key, const char* expect) {
    if (!header.contains(key) || !header[key].is_string() ||
        header[key].get<std::string>() != expect) {
      throw FormatError("cube header field '" + std::string(key) +
                        "' must be \"" + expect + "\"");
    }
  };
  require_string("magic", "HSTC1");
  require_string("dtype", "f32");
  require_string("order", "bsq");
  require_string("endianness", "little");
  const auto require_dim = [&](const char* key) -> Index {
    if (!header.contains(key) || !header[key].is_number_integer() ||
        header[key].get<Index>() < 1) {
      throw FormatError("cube header field '" + std::string(key) +
                        "' must be a positive integer");
    }
    return header[key].get<Index>();
  };
  const Index h = require_dim("height");
  const Index w = require_dim("width");
  const Index b = require_dim("bands");

  const std::vector<char> bytes = read_all(payload_path);
  const std::size_t expected = static_cast<std::size_t>(h * w * b) * 4;
  if (bytes.size() != expected) {
    throw FormatError("cube payload " + payload_path + ": expected " +
                      std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size()));
  }

  HyperCube cube;
  cube.height = h;
  cube.width = w;
  cube.bands = b;
  cube.values = DenseTensor(Shape{h, w, b});
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  // payload is band-sequential, row-major within each H x W plane
  std::size_t pos = 0;
  for (Index band = 0; band < b; ++band) {
    for (Index row = 0; row < h; ++row) {
      for (Index col = 0; col < w; ++col) {
        cube.values(row, col, band) =
            static_cast<double>(f32_from_le(p + pos));
        pos += 4;
      }
    }
  }
  return cube;
}

void save_cube(const std::filesystem::path& base_in, const HyperCube& cube) {
  const auto base = base_path(base_in);
  json header;
  header["magic"] = "HSTC1";
  header["height"] = cube.height;
  header["width"] = cube.width;
  header["bands"] = cube.bands;
  header["dtype"] = "f32";
  header["order"] = "bsq";
  header["endianness"] = "little";
  {
    std::ofstream hout(base.string() + ".json");
    if (!hout) {
      throw FormatError("cannot write cube header " + base.string() + ".json");
    }
    hout << header.dump(2) << "\n";
  }
  std::vector<unsigned char> bytes(
      static_cast<std::size_t>(cube.height * cube.width * cube.bands) * 4);
  std::size_t pos = 0;
  for (Index band = 0; band < cube.bands; ++band) {
    for (Index row = 0; row < cube.height; ++row) {
      for (Index col = 0; col < cube.width; ++col) {
        f32_to_le(static_cast<float>(cube.at(row, col, band)),
                  bytes.data() + pos);
        pos += 4;
      }
    }
  }
  std::ofstream out(base.string() + ".raw", std::ios::binary);
  if (!out) {
    throw FormatError("cannot write cube payload " + base.string() + ".raw");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

LabelMap load_labels(const std::filesystem::path& path, Index height,
                     Index width) {
  const std::vector<char> bytes = read_all(path);
  const std::size_t expected = static_cast<std::size_t>(height * width) * 2;
  if (bytes.size() != expected) {
    throw FormatError("label file " + path.string() + ": expected " +
                      std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size()));
  }
  LabelMap labels;
  labels.height = height;
  labels.width = width;
  labels.ids.resize(static_cast<std::size_t>(height * width));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    labels.ids[i] =
        static_cast<std::uint16_t>(p[2 * i] | (std::uint16_t(p[2 * i + 1]) << 8));
  }
  return labels;
}

void save_labels(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<unsigned char> bytes(labels.ids.size() * 2);
  for (std::size_t i = 0; i < labels.ids.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(labels.ids[i] & 0xff);
    bytes[2 * i + 1] = static_cast<unsigned char>(labels.ids[i] >> 8);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write label file " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::filesystem::path labels_path_for(const std::filesystem::path& cube_path) {
  return base_path(cube_path).string() + ".labels.raw";
}

DenseTensor extract_patch(const HyperCube& cube, Index row, Index col,
                          Index window) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("extract_patch: window must be odd, got " +
                                std::to_string(window));
  }
  if (row < 0 || row >= cube.height || col < 0 || col >= cube.width) {
    throw std::out_of_range("extract_patch: pixel (" + std::to_string(row) +
                            "," + std::to_string(col) + ") outside image");
  }
  const Index half = (window - 1) / 2;
  DenseTensor patch(Shape{window, window, cube.bands});
  for (Index b = 0; b < cube.bands; ++b) {
    for (Index j = 0; j < window; ++j) {
      const Index c = col - half + j;
      if (c < 0 || c >= cube.width) continue;  // zero padding
      for (Index i = 0; i < window; ++i) {
        const Index r = row - half + i;
        if (r < 0 || r >= cube.height) continue;
        patch(i, j, b) = cube.at(r, c, b);
      }
    }
  }
  return patch;
}

SplitIndices split_per_class_indices(const LabelMap& labels, Index n_per_class,
                                     std::uint64_t seed) {
  if (n_per_class < 1) {
    throw std::invalid_argument("split_per_class: n_per_class must be >= 1");
  }
  const Index num_classes = labels.max_class();
  std::vector<std::vector<std::pair<Index, Index>>> by_class(
      static_cast<std::size_t>(num_classes + 1));
  for (Index r = 0; r < labels.height; ++r) {
    for (Index c = 0; c < labels.width; ++c) {
      const std::uint16_t id = labels.at(r, c);
      if (id > 0) by_class[id].emplace_back(r, c);
    }
  }

  SplitIndices split;
  Rng rng(seed);
  for (Index cls = 1; cls <= num_classes; ++cls) {
    auto& pixels = by_class[static_cast<std::size_t>(cls)];
    if (pixels.empty()) {
      std::cerr << "warning: class " << cls
                << " has no labeled pixels, skipped\n";
      continue;
    }
    const Index count = static_cast<Index>(pixels.size());
    // 50% fallback when a class cannot supply n_per_class samples
    const Index take = count < n_per_class ? count / 2 : n_per_class;
    for (Index j = 0; j < take; ++j) {
      const std::uint64_t pick =
          j + rng.below(static_cast<std::uint64_t>(count - j));
      std::swap(pixels[static_cast<std::size_t>(j)],
                pixels[static_cast<std::size_t>(pick)]);
    }
    std::sort(pixels.begin(), pixels.begin() + take);
    std::sort(pixels.begin() + take, pixels.end());
    split.train_coords.insert(split.train_coords.end(), pixels.begin(),
                              pixels.begin() + take);
    split.test_coords.insert(split.test_coords.end(), pixels.begin() + take,
                             pixels.end());
  }
  return split;
}

PatchDataset make_patch_dataset(const HyperCube& cube, const LabelMap& labels,
                                const std::vector<std::pair<Index, Index>>& coords,
                                Index window, std::string split_tag) {
  const Index num_classes = labels.max_class();
  PatchDataset ds;
  ds.split = std::move(split_tag);
  ds.coords = coords;
  ds.patches.reserve(coords.size());
  ds.targets =
      Eigen::MatrixXd::Zero(static_cast<Index>(coords.size()), num_classes);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto [r, c] = coords[i];
    const std::uint16_t id = labels.at(r, c);
    if (id == 0) {
      throw std::invalid_argument("make_patch_dataset: pixel (" +
                                  std::to_string(r) + "," + std::to_string(c) +
                                  ") is unlabeled");
    }
    ds.patches.push_back(extract_patch(cube, r, c, window));
    ds.targets(static_cast<Index>(i), id - 1) = 1.0;
  }
  return ds;
}

std::pair<PatchDataset, PatchDataset> split_per_class(const HyperCube& cube,
                                                      const LabelMap& labels,
                                                      Index n_per_class,
                                                      std::uint64_t seed,
                                                      Index window) {
  if (labels.height != cube.height || labels.width != cube.width) {
    throw std::invalid_argument("split_per_class: label grid is " +
                                std::to_string(labels.height) + "x" +
                                std::to_string(labels.width) + ", cube is " +
                                std::to_string(cube.height) + "x" +
                                std::to_string(cube.width));
  }
  const SplitIndices idx = split_per_class_indices(labels, n_per_class, seed);
  return {make_patch_dataset(cube, labels, idx.train_coords, window, "train"),
          make_patch_dataset(cube, labels, idx.test_coords, window, "test")};
}

}  // namespace hstc
