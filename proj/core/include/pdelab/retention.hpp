#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdelab/diffusion_layer.hpp"

namespace pdelab {

/// Noisy binary chain: X0 is the alternating field of length `length` with a
/// random phase, the label Y is that phase, and every depth flips each
/// symbol independently with probability `flip_prob`. Retention at depth d is
/// I(S(X^d); Y) / I(X^d; Y) with S one pass of the diffusion layer over the
/// one-hot field, both informations estimated by plug-in histograms over
/// fixed random scalar projections.
struct RetentionConfig {
  int chain_depth = 4;
  DiffusionLayerParams smoothing = DiffusionLayerParams::make(2);
  int trials = 5000;
  int bins = 16;
  int length = 16;
  double flip_prob = 0.1;
  int projections = 16;
  std::uint64_t seed = 0;
};

struct RetentionEstimate {
  std::vector<int> depths;  // depths kept (1-based)
  std::vector<double> rho;
  std::vector<double> info_raw;       // bits, mean over projections
  std::vector<double> info_smoothed;  // bits, mean over projections
  std::vector<int> dropped_depths;
  std::vector<std::string> warnings;
  int trials = 0;
  long samples = 0;  // trials x projections per depth
  double spearman = 0.0;  // between depth and rho
};

/// Plug-in mutual information (bits) between a real sample binned into
/// `bins` equal-width bins and integer labels in [0, classes).
/// Throws DegenerateEstimator when bins < 2.
double plugin_mutual_information(std::span<const double> x, std::span<const int> labels, int classes, int bins);

RetentionEstimate estimate_retention(const RetentionConfig& config);

struct RetentionTrend {
  std::vector<double> spearman;  // one per repetition
  int nonpositive = 0;
  double fraction() const {
    return spearman.empty() ? 0.0 : static_cast<double>(nonpositive) / static_cast<double>(spearman.size());
  }
};

/// Repeats the estimate with seeds config.seed + r for r in [0, repetitions),
/// on up to `jobs` threads; results are ordered by repetition.
RetentionTrend retention_trend(const RetentionConfig& config, int repetitions, int jobs = 1);

}  // namespace pdelab
