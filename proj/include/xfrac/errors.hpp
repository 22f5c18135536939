#pragma once

#include <stdexcept>
#include <string>

namespace xfrac {

// Error categories map one-to-one onto CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 1
};

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 1
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 2
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 3
};

}  // namespace xfrac
