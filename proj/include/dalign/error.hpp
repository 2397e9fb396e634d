#pragma once

#include <stdexcept>
#include <string>

namespace dalign {

// Malformed input, broken invariants, or inconsistent artifacts. The CLI maps
// this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures (missing file, unwritable output). Exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dalign
