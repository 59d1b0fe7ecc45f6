#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>

#include "hstc/linear_model.hpp"
#include "hstc/rank1_fnn.hpp"

namespace hstc {

/// Split parameters recorded alongside a trained model so evaluation can
/// reproduce the exact train/test partition.
struct SplitSpec {
  std::uint64_t seed = 1;
  Index samples_per_class = 50;
};

using AnyModel = std::variant<TensorLRModel, Rank1FNNModel>;

struct ModelFile {
  AnyModel model;
  std::optional<SplitSpec> split;
};

// JSON model document, format_version 1. Doubles are written in shortest
// round-trip form, so reloaded weights are bit-identical. Field or shape
// violations raise FormatError naming the field.

void save_model(const std::filesystem::path& path, const TensorLRModel& m,
                const std::optional<SplitSpec>& split = std::nullopt);
void save_model(const std::filesystem::path& path, const Rank1FNNModel& m,
                const std::optional<SplitSpec>& split = std::nullopt);

ModelFile load_model(const std::filesystem::path& path);

}  // namespace hstc
