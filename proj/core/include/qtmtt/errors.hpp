#pragma once

#include <stdexcept>

namespace qtmtt {

// Bad parameters, flag combinations, or model/shape mismatches.  Exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable, unwritable, or malformed files.  Exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric breakdowns: NaN loss, degenerate RD curves, and the like.  Exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qtmtt
