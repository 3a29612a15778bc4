#include "pdelab/retention.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pdelab/errors.hpp"
#include "pdelab/parallel.hpp"
#include "pdelab/stats.hpp"

namespace pdelab {

double plugin_mutual_information(std::span<const double> x, std::span<const int> labels, int classes, int bins) {
  if (bins < 2) throw DegenerateEstimator("histogram needs at least 2 bins, got " + std::to_string(bins));
  if (classes < 1 || x.size() != labels.size() || x.empty())
    throw InvalidArgument("mutual information needs equal-length non-empty samples");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  std::vector<double> joint(static_cast<std::size_t>(bins * classes), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>((x[i] - lo) / width * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    if (labels[i] < 0 || labels[i] >= classes) throw InvalidArgument("label out of range");
    joint[static_cast<std::size_t>(b * classes + labels[i])] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  std::vector<double> px(static_cast<std::size_t>(bins), 0.0), py(static_cast<std::size_t>(classes), 0.0);
  for (int b = 0; b < bins; ++b)
    for (int c = 0; c < classes; ++c) {
      const double p = joint[static_cast<std::size_t>(b * classes + c)] / n;
      px[static_cast<std::size_t>(b)] += p;
      py[static_cast<std::size_t>(c)] += p;
    }
  double mi = 0.0;
  for (int b = 0; b < bins; ++b)
    for (int c = 0; c < classes; ++c) {
      const double p = joint[static_cast<std::size_t>(b * classes + c)] / n;
      if (p > 0.0) mi += p * std::log2(p / (px[static_cast<std::size_t>(b)] * py[static_cast<std::size_t>(c)]));
    }
  return std::max(mi, 0.0);
}

RetentionEstimate estimate_retention(const RetentionConfig& config) {
  if (config.chain_depth < 2) throw InvalidArgument("retention needs chain_depth >= 2");
  if (config.trials < 1000) throw InvalidArgument("retention needs at least 1000 trials");
  if (config.bins < 2) throw DegenerateEstimator("histogram needs at least 2 bins, got " + std::to_string(config.bins));
  if (config.length < 2 || config.projections < 1) throw InvalidArgument("retention needs length >= 2 and projections >= 1");
  if (config.flip_prob < 0.0 || config.flip_prob > 1.0) throw InvalidArgument("flip_prob must lie in [0, 1]");
  config.smoothing.validate();
  if (config.smoothing.raw_alpha.cols() != 2 && !config.smoothing.tied)
    throw DimensionMismatch("smoothing must have 2 channels (one-hot binary field)");

  const int len = config.length;
  const int trials = config.trials;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> proj;
  for (int p = 0; p < config.projections; ++p) {
    Eigen::MatrixXd r(len, 2);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < len; ++i) r(i, j) = normal(rng);
    proj.push_back(std::move(r));
  }

  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(config.flip_prob);
  std::vector<int> labels(static_cast<std::size_t>(trials));
  std::vector<std::vector<int>> bits(static_cast<std::size_t>(trials), std::vector<int>(static_cast<std::size_t>(len)));
  for (int t = 0; t < trials; ++t) {
    labels[static_cast<std::size_t>(t)] = coin(rng) ? 1 : 0;
    for (int i = 0; i < len; ++i) bits[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = (i + labels[static_cast<std::size_t>(t)]) % 2;
  }

  RetentionEstimate est;
  est.trials = trials;
  est.samples = static_cast<long>(trials) * config.projections;
  std::vector<std::vector<double>> raw(proj.size(), std::vector<double>(static_cast<std::size_t>(trials)));
  std::vector<std::vector<double>> smooth = raw;
  Eigen::MatrixXd onehot(len, 2);
  LayerCache cache;
  for (int d = 1; d <= config.chain_depth; ++d) {
    for (int t = 0; t < trials; ++t) {
      auto& b = bits[static_cast<std::size_t>(t)];
      for (int i = 0; i < len; ++i) {
        if (flip(rng)) b[static_cast<std::size_t>(i)] ^= 1;
        onehot(i, 0) = 1.0 - b[static_cast<std::size_t>(i)];
        onehot(i, 1) = b[static_cast<std::size_t>(i)];
      }
      const Eigen::MatrixXd s = forward(onehot, config.smoothing, cache);
      for (std::size_t p = 0; p < proj.size(); ++p) {
        raw[p][static_cast<std::size_t>(t)] = (proj[p].array() * onehot.array()).sum();
        smooth[p][static_cast<std::size_t>(t)] = (proj[p].array() * s.array()).sum();
      }
    }
    double ir = 0.0, is = 0.0;
    for (std::size_t p = 0; p < proj.size(); ++p) {
      ir += plugin_mutual_information(raw[p], labels, 2, config.bins);
      is += plugin_mutual_information(smooth[p], labels, 2, config.bins);
    }
    ir /= static_cast<double>(proj.size());
    is /= static_cast<double>(proj.size());
    if (ir < 1e-6) {
      est.dropped_depths.push_back(d);
      est.warnings.push_back("depth " + std::to_string(d) + ": I(X;Y) = " + std::to_string(ir) + " bits below 1e-6, dropped");
      continue;
    }
    est.depths.push_back(d);
    est.info_raw.push_back(ir);
    est.info_smoothed.push_back(is);
    est.rho.push_back(is / ir);
  }
  if (est.depths.size() >= 2) {
    std::vector<double> depth(est.depths.begin(), est.depths.end());
    est.spearman = stats::spearman(depth, est.rho);
  }
  return est;
}

RetentionTrend retention_trend(const RetentionConfig& config, int repetitions, int jobs) {
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  RetentionTrend trend;
  trend.spearman.assign(static_cast<std::size_t>(repetitions), 0.0);
  parallel_for(static_cast<std::size_t>(repetitions), jobs, [&](std::size_t r) {
    RetentionConfig c = config;
    c.seed = config.seed + r;
    trend.spearman[r] = estimate_retention(c).spearman;
  });
  for (double s : trend.spearman) trend.nonpositive += s <= 0.0 ? 1 : 0;
  return trend;
}

}  // namespace pdelab
