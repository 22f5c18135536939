#pragma once

#include <string>

#include "xfrac/problem.hpp"

namespace xfrac {

// One run = one config file. Sections and keys are documented in the
// README; unknown keys are rejected, missing keys take preset defaults.
struct RunConfig {
  ProblemSpec spec;
  std::string out_dir = "out";
  int grid = 0;       // export grid points per axis (0: preset default)
  int verbosity = 1;
  int threads = 0;    // 0: library default

  int export_grid() const { return grid > 0 ? grid : (spec.dim == 1 ? 2001 : 101); }
};

// Parses the key-value document. Malformed lines and unknown keys raise
// ConfigError with the line number; invariant violations name the field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical serialization; parse(serialize(c)) round-trips exactly.
std::string serialize_config(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace xfrac
