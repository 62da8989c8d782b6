#pragma once

#include <stdexcept>
#include <string>

namespace wspkit {

// Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
// NumericError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inadequate input data (parse failures, missing annotations,
// empty metric inputs, incompatible checkpoints).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures (non-finite gradients, divergence, degenerate geometry).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wspkit
