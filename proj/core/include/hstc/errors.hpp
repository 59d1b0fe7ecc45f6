#pragma once

#include <stdexcept>
#include <string>

namespace hstc {

/// On-disk format violations (bad magic, size mismatch, missing field).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite objective); message names sweep and block.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hstc
