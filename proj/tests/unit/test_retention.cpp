#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "pdelab/errors.hpp"
#include "pdelab/retention.hpp"

namespace pdelab {
namespace {

// Direct plug-in sum over the joint table, written from the definition.
double mi_oracle(const std::vector<int>& bx, const std::vector<int>& y) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  const double n = static_cast<double>(bx.size());
  for (std::size_t i = 0; i < bx.size(); ++i) {
    joint[{bx[i], y[i]}] += 1 / n;
    px[bx[i]] += 1 / n;
    py[y[i]] += 1 / n;
  }
  double mi = 0;
  for (const auto& [k, p] : joint) mi += p * std::log2(p / (px[k.first] * py[k.second]));
  return mi;
}

TEST(PluginMutualInformation, MatchesDefinition) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x;
  std::vector<int> y, bx;
  for (int i = 0; i < 4000; ++i) {
    const int label = i % 3;
    y.push_back(label);
    x.push_back(label + n(rng));
  }
  const int bins = 10;
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  for (double v : x) bx.push_back(std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins)));
  EXPECT_NEAR(plugin_mutual_information(x, y, 3, bins), mi_oracle(bx, y), 1e-12);
}

TEST(PluginMutualInformation, ExactCases) {
  const std::vector<double> x{0, 0, 1, 1, 0, 1, 0, 1};
  const std::vector<int> same{0, 0, 1, 1, 0, 1, 0, 1};
  const std::vector<int> indep{0, 1, 0, 1, 0, 1, 1, 0};
  EXPECT_NEAR(plugin_mutual_information(x, same, 2, 2), 1.0, 1e-15);
  EXPECT_NEAR(plugin_mutual_information(x, indep, 2, 2), 0.0, 1e-15);
  const std::vector<double> flat(8, 3.0);
  EXPECT_EQ(plugin_mutual_information(flat, same, 2, 4), 0.0);
}

TEST(PluginMutualInformation, OneBinIsDegenerate) {
  const std::vector<double> x{0, 1};
  const std::vector<int> y{0, 1};
  EXPECT_THROW(plugin_mutual_information(x, y, 2, 1), DegenerateEstimator);
}

TEST(Retention, NoiselessChainIsFlat) {
  RetentionConfig c;
  c.flip_prob = 0.0;
  c.trials = 2000;
  const auto r = estimate_retention(c);
  ASSERT_EQ(r.rho.size(), 4u);
  for (double rho : r.rho) EXPECT_NEAR(rho, r.rho.front(), 0.05);
}

TEST(Retention, NoisyChainRetainsLessWithDepth) {
  RetentionConfig c;
  const auto r = estimate_retention(c);
  ASSERT_EQ(r.depths, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(r.samples, 5000L * 16);
  for (std::size_t i = 0; i < r.rho.size(); ++i) {
    EXPECT_GT(r.rho[i], 0.0);
    EXPECT_LE(r.rho[i], 1.05);
    EXPECT_NEAR(r.rho[i], r.info_smoothed[i] / r.info_raw[i], 1e-12);
  }
  EXPECT_GT(r.info_raw.front(), r.info_raw.back());
  EXPECT_LE(r.spearman, 0.0);
}

TEST(Retention, InvalidArguments) {
  RetentionConfig c;
  c.chain_depth = 1;
  EXPECT_THROW(estimate_retention(c), InvalidArgument);
  c.chain_depth = 3;
  c.trials = 999;
  EXPECT_THROW(estimate_retention(c), InvalidArgument);
  c.trials = 1000;
  c.bins = 1;
  EXPECT_THROW(estimate_retention(c), DegenerateEstimator);
}

TEST(Retention, UninformativeDepthsAreDropped) {
  RetentionConfig c;
  c.flip_prob = 0.5;
  c.trials = 1000;
  c.bins = 2;
  c.chain_depth = 2;
  const auto r = estimate_retention(c);
  EXPECT_EQ(r.depths.size() + r.dropped_depths.size(), 2u);
  EXPECT_EQ(r.warnings.size(), r.dropped_depths.size());
}

TEST(Retention, TrendIsThreadCountIndependent) {
  RetentionConfig c;
  c.trials = 1000;
  const auto a = retention_trend(c, 4, 1);
  const auto b = retention_trend(c, 4, 3);
  EXPECT_EQ(a.spearman, b.spearman);
  EXPECT_EQ(a.nonpositive, b.nonpositive);
}

}  // namespace
}  // namespace pdelab
