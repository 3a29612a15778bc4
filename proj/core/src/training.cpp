#include "pdelab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "pdelab/errors.hpp"

namespace pdelab {

double TrainReport::best_val_accuracy() const {
  double best = 0.0;
  for (const auto& e : epochs) best = std::max(best, e.val_accuracy);
  return best;
}

namespace {

void monitor(const Model& model, TrainReport& report) {
  ++report.logged_steps;
  if (!model.has_pde()) return;
  const DiffusionLayerParams p = model.pde_params();
  const Eigen::Index channels = model.config().pde_channels();
  Eigen::MatrixXd alpha(p.raw_alpha.rows(), p.raw_alpha.cols());
  for (Eigen::Index j = 0; j < alpha.cols(); ++j)
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) alpha(k, j) = constrain_alpha(p.raw_alpha(k, j), p.alpha_bound);
  const Eigen::MatrixXd eff = effective_alphas(p, channels);
  const Eigen::VectorXd sums = (eff.array().colwise() * p.mix_weights.array().abs()).colwise().sum().transpose();
  const double lo = alpha.minCoeff();
  const double hi = alpha.maxCoeff();
  const double s = sums.maxCoeff();
  if (report.logged_steps == 1) {
    report.min_alpha = lo;
    report.max_alpha = hi;
    report.max_channel_sum = s;
  } else {
    report.min_alpha = std::min(report.min_alpha, lo);
    report.max_alpha = std::max(report.max_alpha, hi);
    report.max_channel_sum = std::max(report.max_channel_sum, s);
  }
  const bool bad = !(lo > 0.0) || !(hi < p.alpha_bound) || !(eff.minCoeff() > 0.0) || !(s < p.alpha_bound) ||
                   !alpha.allFinite();
  if (bad) ++report.cfl_violations;
}

double learning_rate(const TrainOptions& o, long step, long total) {
  double lr = o.lr;
  if (o.warmup_steps > 0 && step < o.warmup_steps) return lr * static_cast<double>(step + 1) / o.warmup_steps;
  if (o.cosine && total > o.warmup_steps) {
    const double t = static_cast<double>(step - o.warmup_steps) / static_cast<double>(total - o.warmup_steps);
    lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  return lr;
}

}  // namespace

TrainReport train(Model& model, const TaskDataset& dataset, const TrainOptions& options) {
  if (options.epochs < 0 || options.batch < 1) throw InvalidArgument("epochs must be >= 0 and batch >= 1");
  if (options.lr < 0.0 || options.clip_norm <= 0.0) throw InvalidArgument("lr must be >= 0 and clip_norm > 0");
  dataset.validate();
  const auto& cfg = model.config();
  if (dataset.vocab > cfg.vocab || dataset.max_len > cfg.max_len || dataset.num_classes != cfg.num_classes)
    throw DimensionMismatch("dataset '" + dataset.name + "' does not match the model vocabulary, length or classes");

  std::size_t n_train = dataset.train.size();
  if (options.train_limit > 0) n_train = std::min(n_train, static_cast<std::size_t>(options.train_limit));
  std::vector<Example> train_set(dataset.train.begin(), dataset.train.begin() + static_cast<std::ptrdiff_t>(n_train));

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  auto& params = model.parameters();
  ParameterList velocity = model.zero_gradients();
  ParameterList grads = model.zero_gradients();
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  monitor(model, report);
  const long steps_per_epoch = static_cast<long>((n_train + static_cast<std::size_t>(options.batch) - 1) /
                                                 static_cast<std::size_t>(options.batch));
  const long total_steps = steps_per_epoch * options.epochs;
  long step = 0;
  std::vector<Example> batch;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(options.batch)) {
      const std::size_t stop = std::min(n_train, start + static_cast<std::size_t>(options.batch));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
      for (auto& g : grads) g.setZero();
      const double loss = model.accumulate_gradients(batch, cfg.dropout, rng, grads);
      const double inv = 1.0 / static_cast<double>(batch.size());
      if (!std::isfinite(loss))
        throw Divergence("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      report.step_losses.push_back(loss * inv);
      loss_sum += loss;

      double norm2 = 0.0;
      for (std::size_t i = 0; i < grads.size(); ++i) {
        if (options.freeze_pde && model.is_pde_parameter(i)) continue;
        grads[i] *= inv;
        norm2 += grads[i].squaredNorm();
      }
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm)) throw Divergence("non-finite gradient at epoch " + std::to_string(epoch));
      const double clip = norm > options.clip_norm ? options.clip_norm / norm : 1.0;
      const double lr = learning_rate(options, step, total_steps);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (options.freeze_pde && model.is_pde_parameter(i)) continue;
        velocity[i] = options.momentum * velocity[i] + clip * grads[i];
        params[i] -= lr * velocity[i];
      }
      ++step;
      monitor(model, report);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n_train);
    rec.val_accuracy = model.accuracy(dataset.val);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    if (options.target_accuracy && rec.val_accuracy >= *options.target_accuracy) break;
  }

  if (model.has_pde()) {
    const DiffusionLayerParams p = model.pde_params();
    report.final_alpha = effective_alphas(p, cfg.pde_channels());
    report.final_mix_weights = p.mix_weights;
  }
  return report;
}

}  // namespace pdelab
