#include "hstc/dataset.hpp"

#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "hstc/softmax.hpp"

namespace hstc {

Shape PatchDataset::patch_shape() const {
  if (patches.empty()) {
    throw std::invalid_argument("PatchDataset: empty dataset");
  }
  return patches.front().shape();
}

Index PatchDataset::label(Index i) const {
  return argmax_lowest_tie(targets.row(i).transpose());
}

Index PatchDataset::distinct_labels() const {
  std::set<Index> seen;
  for (Index i = 0; i < size(); ++i) {
    seen.insert(label(i));
  }
  return static_cast<Index>(seen.size());
}

void PatchDataset::validate() const {
  if (patches.empty()) {
    throw std::invalid_argument("PatchDataset: empty dataset");
  }
  if (targets.rows() != size()) {
    throw std::invalid_argument("PatchDataset: " + std::to_string(size()) +
                                " patches but " +
                                std::to_string(targets.rows()) +
                                " target rows");
  }
  const Shape shape = patch_shape();
  for (Index i = 0; i < size(); ++i) {
    if (patches[static_cast<std::size_t>(i)].shape() != shape) {
      throw std::invalid_argument("PatchDataset: patch " + std::to_string(i) +
                                  " has a different shape");
    }
    double row_sum = 0.0;
    for (Index k = 0; k < targets.cols(); ++k) {
      const double t = targets(i, k);
      if (t != 0.0 && t != 1.0) {
        throw std::invalid_argument("PatchDataset: target (" +
                                    std::to_string(i) + "," +
                                    std::to_string(k) + ") is not 0/1");
      }
      row_sum += t;
    }
    if (row_sum != 1.0) {
      throw std::invalid_argument("PatchDataset: target row " +
                                  std::to_string(i) + " does not sum to 1");
    }
  }
}

PatchDataset dataset_from_labels(std::vector<DenseTensor> patches,
                                 const std::vector<Index>& labels,
                                 Index num_classes) {
  if (patches.size() != labels.size()) {
    throw std::invalid_argument("dataset_from_labels: " +
                                std::to_string(patches.size()) +
                                " patches vs " + std::to_string(labels.size()) +
                                " labels");
  }
  PatchDataset ds;
  ds.patches = std::move(patches);
  ds.targets = Eigen::MatrixXd::Zero(static_cast<Index>(labels.size()),
                                     num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("dataset_from_labels: label " +
                                  std::to_string(labels[i]) +
                                  " out of range for " +
                                  std::to_string(num_classes) + " classes");
    }
    ds.targets(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return ds;
}

}  // namespace hstc
