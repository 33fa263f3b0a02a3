#pragma once

#include <stdexcept>
#include <string>

namespace qsv {

/// Raised for every contract violation in the library: shape mismatches,
/// non-finite inputs, malformed files, overflow in integer kernels.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsv
