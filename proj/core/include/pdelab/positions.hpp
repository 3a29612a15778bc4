#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdelab/training.hpp"
#include "pdelab/transformer.hpp"

namespace pdelab {

struct PositionRow {
  IntegrationPosition position = IntegrationPosition::None;
  std::vector<double> accuracies;  // one per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;
  long cfl_violations = 0;
  long logged_steps = 0;
};

struct EvaluateOptions {
  TrainOptions train;
  std::vector<IntegrationPosition> positions = all_positions();
  // Pin every diffusion coefficient at the alpha -> 0 limit and freeze it.
  bool identity_limit = false;
  int jobs = 1;
};

/// Trains every (position, seed) pair and returns one row per position,
/// ranked by mean validation accuracy. The seed drives both the model
/// initialisation and the training order. Requires at least 3 seeds.
std::vector<PositionRow> evaluate_positions(const ModelConfig& base, const TaskDataset& dataset,
                                            std::span<const std::uint64_t> seeds, const EvaluateOptions& options);

/// Descending by mean accuracy; ties broken by position name.
void sort_ranking(std::vector<PositionRow>& rows);

/// True when the mean +- 1 std intervals of the two rows overlap.
bool intervals_overlap(const PositionRow& a, const PositionRow& b);

struct PositionValueWeights {
  double w_info = 1.0;
  double w_distortion = 0.0;
  double w_cost = 0.0;

  /// Throws InvalidArgument on negative weights or when all are zero.
  void validate() const;
};

struct PositionMetrics {
  double info = 0.0;
  double distortion = 0.0;
  double cost = 0.0;
};

/// w_I * I - w_D * D - w_C * C.
double position_value(double info, double distortion, double cost, const PositionValueWeights& w);

/// Index of the highest value (first one on ties).
std::size_t best_position(std::span<const PositionMetrics> candidates, const PositionValueWeights& w);

}  // namespace pdelab
