#include "hstc/scaling.hpp"

#include <stdexcept>
#include <string>

namespace hstc {

void FeatureScaling::apply_in_place(DenseTensor& x) const {
  if (x.size() != mean.size() || x.size() != stddev.size()) {
    throw std::invalid_argument(
        "FeatureScaling: input has " + std::to_string(x.size()) +
        " elements, stats have " + std::to_string(mean.size()));
  }
  x.data() = (x.data() - mean).cwiseQuotient(stddev);
}

DenseTensor FeatureScaling::apply(const DenseTensor& x) const {
  DenseTensor out = x;
  apply_in_place(out);
  return out;
}

}  // namespace hstc
