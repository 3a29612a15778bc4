#pragma once

#include <iosfwd>

#include "pdelab/config.hpp"

namespace pdelab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;

struct RunOptions {
  int jobs = 1;
  // Single-threaded, and wall-clock columns written as 0 so identical
  // configs give identical bytes.
  bool deterministic = false;
  std::ostream* log = nullptr;  // summary echo; nullptr = silent
};

/// Runs one subcommand: writes the CSV at config "out", the summary next to
/// it, and returns 0 (all checks passed), 1 (a check failed) or 2 (bad
/// configuration).
int run(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace pdelab
