#pragma once

#include <functional>
#include <string>
#include <vector>

namespace pdelab {

struct TimingPoint {
  long length = 0;
  int scales = 0;
  double median_seconds = 0.0;  // per call
  double iqr_ratio = 0.0;       // IQR / median over repetitions
  int reps = 0;
  long inner = 1;  // calls per repetition
};

struct ScalingFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

struct ComplexityOptions {
  std::vector<long> diffusion_grid{256, 512, 1024, 2048, 4096, 8192};
  std::vector<long> attention_grid{256, 512, 1024, 2048, 4096};
  int channels = 64;
  int scales = 3;
  long k_length = 2048;
  int reps = 7;
  // Each repetition runs the call enough times to last at least this long.
  double min_rep_seconds = 5e-3;
};

struct ComplexityReport {
  std::vector<TimingPoint> diffusion;
  std::vector<TimingPoint> attention;
  ScalingFit diffusion_fit;
  ScalingFit attention_fit;
  TimingPoint k_base;
  TimingPoint k_doubled;
  double k_ratio = 0.0;
  std::vector<std::string> warnings;
};

/// Median per-call time of `fn` over `reps` repetitions after one warmup
/// repetition. The inner call count grows until a repetition spans at least
/// `min_rep_seconds` and 50 clock ticks; throws TimerResolution if that cannot
/// be reached.
TimingPoint time_call(const std::function<void()>& fn, int reps, double min_rep_seconds);

/// Log-log least-squares fit of time against length.
ScalingFit fit_scaling(const std::vector<TimingPoint>& points);

/// Times the diffusion layer forward pass without cache (d channels,
/// scales 1, 2, 4, ...)
/// and a single-head softmax attention forward over the same width.
/// Requires >= 5 lengths per grid spanning >= 16x and reps >= 7.
ComplexityReport bench_complexity(const ComplexityOptions& options);

}  // namespace pdelab
