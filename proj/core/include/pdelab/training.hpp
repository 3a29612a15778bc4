#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pdelab/tasks.hpp"
#include "pdelab/transformer.hpp"

namespace pdelab {

struct TrainOptions {
  int epochs = 10;
  int batch = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double clip_norm = 1.0;
  // Linear warmup over this many steps, then cosine decay to zero when
  // `cosine` is set; constant learning rate otherwise.
  int warmup_steps = 0;
  bool cosine = false;
  // Keep the diffusion coefficients and mix weights fixed.
  bool freeze_pde = false;
  // Stop after the first epoch whose validation accuracy reaches this.
  std::optional<double> target_accuracy;
  // Use only the first N training examples (0 = all).
  int train_limit = 0;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  // Mean loss of every optimiser step, in order.
  std::vector<double> step_losses;
  // Coefficient monitoring over every logged step (including the initial state).
  long logged_steps = 0;
  long cfl_violations = 0;
  double min_alpha = 0.0;
  double max_alpha = 0.0;
  double max_channel_sum = 0.0;
  // Final snapshot: constrained coefficients (after the combined rescale),
  // K x channels, and mix weights. Empty for the baseline.
  Eigen::MatrixXd final_alpha;
  Eigen::VectorXd final_mix_weights;

  double final_val_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().val_accuracy; }
  double best_val_accuracy() const;
};

/// Minibatch gradient descent with momentum and global-norm clipping.
/// Deterministic given the seeds. Throws Divergence on a non-finite loss.
TrainReport train(Model& model, const TaskDataset& dataset, const TrainOptions& options);

}  // namespace pdelab
