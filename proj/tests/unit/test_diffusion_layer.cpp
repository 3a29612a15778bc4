#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pdelab/diffusion_layer.hpp"
#include "pdelab/errors.hpp"
#include "pdelab/spectral.hpp"

namespace pdelab {
namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = normal(rng);
  return m;
}

DiffusionLayerParams random_params(std::mt19937_64& rng, Eigen::Index channels, bool post_norm) {
  auto p = DiffusionLayerParams::make(channels);
  p.raw_alpha = random_matrix(rng, 3, channels, 1.5);
  p.mix_weights += random_matrix(rng, 3, 1, 0.2);
  p.post_norm = post_norm;
  return p;
}

TEST(ConstrainAlpha, Values) {
  EXPECT_DOUBLE_EQ(constrain_alpha(0.0, 0.5), 0.25);
  EXPECT_NEAR(constrain_alpha(std::log(0.2 / 0.8), 0.5), 0.1, 1e-15);
  EXPECT_NEAR(std::log(0.2 / 0.8), -1.3862943611198906, 1e-15);
  EXPECT_NEAR(unconstrain_alpha(0.1, 0.5), std::log(0.25), 1e-15);
  EXPECT_LT(constrain_alpha(40.0, 0.5), 0.5);
  EXPECT_GT(constrain_alpha(-700.0, 0.5), 0.0);
  EXPECT_LE(constrain_alpha(1e6, 0.5), 0.5);
  double prev = 0.0;
  for (double raw = -20; raw <= 20; raw += 0.5) {
    const double a = constrain_alpha(raw, 0.5);
    EXPECT_GT(a, prev);
    prev = a;
  }
}

TEST(LayerParams, DefaultInitialisation) {
  const auto p = DiffusionLayerParams::make(8);
  EXPECT_EQ(p.scales, (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(p.mix_weights, Eigen::Vector3d(1.0, 0.6, 0.3));
  EXPECT_EQ(p.raw_alpha.rows(), 3);
  EXPECT_EQ(p.raw_alpha.cols(), 8);
  const Eigen::MatrixXd a = effective_alphas(p, 8);
  EXPECT_NEAR(a.maxCoeff(), 0.1, 1e-15);
  EXPECT_NEAR(a.minCoeff(), 0.1, 1e-15);
  EXPECT_EQ(p.parameter_count(), 3 * 8 + 3);
  EXPECT_EQ(DiffusionLayerParams::make(8, {1, 2, 4}, 0.1, true).parameter_count(), 3 + 3);
}

TEST(LayerParams, Validation) {
  auto p = DiffusionLayerParams::make(4);
  p.scales = {1, 1, 2};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = DiffusionLayerParams::make(4);
  p.mix_weights.resize(2);
  EXPECT_THROW(p.validate(), DimensionMismatch);
  p = DiffusionLayerParams::make(4);
  EXPECT_THROW(forward(SequenceField::zeros(4, 4), p), InvalidStencil);  // scale 4 on L = 4
  EXPECT_THROW(forward(SequenceField::zeros(8, 3), p), DimensionMismatch);
}

TEST(LayerForward, IdentityLimit) {
  std::mt19937_64 rng(1);
  auto p = DiffusionLayerParams::make(5);
  p.raw_alpha.setConstant(-40.0);
  const SequenceField x(random_matrix(rng, 20, 5));
  EXPECT_LT((forward(x, p).out.values() - x.values()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LayerForward, CosineModeGain) {
  const Eigen::Index n = 32;
  const Eigen::MatrixXd basis = dct_basis(n);
  const Eigen::VectorXd lambda = eigenvalues(n);
  auto p = DiffusionLayerParams::make(1, {1});
  p.set_uniform_alpha(0.3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto out = forward(SequenceField(Eigen::MatrixXd(basis.col(k))), p).out;
    EXPECT_LT((out.values().col(0) - (1 + 0.3 * lambda(k)) * basis.col(k)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LayerForward, MultiscaleGainMatchesTransferFunctionsOnReflectLattice) {
  // Each reflect-boundary Delta_h shares the cosine basis, so the fused layer
  // multiplies mode k by 1 + sum_k w_k alpha_k (H_h(pi k / L) - 1).
  const Eigen::Index n = 40;
  const Eigen::MatrixXd basis = dct_basis(n);
  const auto p = DiffusionLayerParams::make(1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double omega = std::numbers::pi * k / n;
    double gain = 1.0;
    for (int s = 0; s < 3; ++s) gain += p.mix_weights(s) * (frequency_response(omega, p.scales[s], 0.1) - 1.0);
    const auto out = forward(SequenceField(Eigen::MatrixXd(basis.col(k))), p).out;
    EXPECT_LT((out.values().col(0) - gain * basis.col(k)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LayerForward, MeanPreserved) {
  std::mt19937_64 rng(2);
  for (auto mode : {BoundaryMode::NeumannReflect, BoundaryMode::ReplicateClamp}) {
    auto p = random_params(rng, 8, false);
    p.boundary = mode;
    const SequenceField x(random_matrix(rng, 32, 8));
    const auto y = forward(x, p).out;
    EXPECT_LT((y.channel_means() - x.channel_means()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LayerForward, PostNormRowsAreStandardised) {
  std::mt19937_64 rng(3);
  const auto p = random_params(rng, 6, true);
  const auto y = forward(SequenceField(random_matrix(rng, 12, 6)), p).out;
  EXPECT_LT(y.values().rowwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd var = y.values().rowwise().squaredNorm() / 6.0;
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-3);
}

TEST(LayerForward, CombinedCflIsEnforcedPerChannel) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = DiffusionLayerParams::make(4);
    p.raw_alpha = random_matrix(rng, 3, 4, 20.0);
    p.mix_weights = random_matrix(rng, 3, 1, 3.0);
    const Eigen::MatrixXd a = effective_alphas(p, 4);
    const Eigen::VectorXd sums = a.transpose() * p.mix_weights.cwiseAbs();
    EXPECT_LT(sums.maxCoeff(), 0.5);
    EXPECT_GT(a.minCoeff(), 0.0);
  }
}

TEST(LayerForward, RepeatedApplicationNeverRaisesDirichletEnergy) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = DiffusionLayerParams::make(3);
    p.raw_alpha = random_matrix(rng, 3, 3, 10.0);  // saturates towards the bound
    for (int k = 0; k < 3; ++k) p.mix_weights(k) = unif(rng);
    SequenceField x(random_matrix(rng, 24, 3));
    double prev = dirichlet_energy(x);
    for (int step = 0; step < 1000; ++step) {
      x = forward(x, p).out;
      const double e = dirichlet_energy(x);
      ASSERT_LE(e - prev, 1e-9 * prev + 1e-300) << "trial " << trial << " step " << step;
      prev = e;
    }
  }
}

TEST(LayerForward, Linearity) {
  std::mt19937_64 rng(6);
  const auto p = random_params(rng, 4, false);
  const Eigen::MatrixXd x = random_matrix(rng, 16, 4), y = random_matrix(rng, 16, 4);
  const double a = 1.7, b = -0.4;
  const auto lhs = forward(SequenceField(Eigen::MatrixXd(a * x + b * y)), p).out.values();
  const Eigen::MatrixXd rhs =
      a * forward(SequenceField(x), p).out.values() + b * forward(SequenceField(y), p).out.values();
  EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(LayerBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(7);
  for (bool post_norm : {false, true}) {
    const auto p = random_params(rng, 4, post_norm);
    const auto fwd = forward(SequenceField(random_matrix(rng, 10, 4)), p);
    const auto g = backward(fwd.cache, Eigen::MatrixXd::Zero(10, 4));
    EXPECT_EQ(g.grad_in.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.grad_raw_alpha.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.grad_mix_weights.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(LayerBackward, IdentityLimitPassesGradientThrough) {
  std::mt19937_64 rng(8);
  auto p = DiffusionLayerParams::make(3);
  p.raw_alpha.setConstant(-40.0);
  const auto fwd = forward(SequenceField(random_matrix(rng, 9, 3)), p);
  const Eigen::MatrixXd g = random_matrix(rng, 9, 3);
  EXPECT_LT((backward(fwd.cache, g).grad_in - g).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(backward(fwd.cache, Eigen::MatrixXd::Zero(8, 3)), DimensionMismatch);
}

TEST(LayerBackward, TransposeIdentity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, 5, false);
    const Eigen::MatrixXd x = random_matrix(rng, 18, 5), g = random_matrix(rng, 18, 5);
    const auto fwd = forward(SequenceField(x), p);
    const double lhs = fwd.out.values().cwiseProduct(g).sum();
    const double rhs = x.cwiseProduct(backward(fwd.cache, g).grad_in).sum();
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::max(std::abs(lhs), 1.0));
  }
}

// Entry-wise central differences of sum(out^2) for every parameter.
TEST(LayerBackward, MatchesEntrywiseFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (bool post_norm : {false, true}) {
    auto p = random_params(rng, 4, post_norm);
    p.raw_alpha(1, 2) = 6.0;  // push one channel through the combined-CFL rescale
    const Eigen::MatrixXd x = random_matrix(rng, 16, 4);
    auto loss = [&](const Eigen::MatrixXd& xx, const DiffusionLayerParams& pp) {
      return forward(SequenceField(xx), pp).out.values().squaredNorm();
    };
    const auto fwd = forward(SequenceField(x), p);
    ASSERT_TRUE(fwd.cache.rescaled.any());
    const auto g = backward(fwd.cache, Eigen::MatrixXd(2.0 * fwd.out.values()));
    const double h = 1e-5;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); };
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Eigen::MatrixXd xp = x, xm = x;
      xp.data()[j] += h;
      xm.data()[j] -= h;
      EXPECT_LT(rel(g.grad_in.data()[j], (loss(xp, p) - loss(xm, p)) / (2 * h)), 1e-5);
    }
    for (Eigen::Index j = 0; j < p.raw_alpha.size(); ++j) {
      auto pp = p, pm = p;
      pp.raw_alpha.data()[j] += h;
      pm.raw_alpha.data()[j] -= h;
      EXPECT_LT(rel(g.grad_raw_alpha.data()[j], (loss(x, pp) - loss(x, pm)) / (2 * h)), 1e-5);
    }
    for (Eigen::Index j = 0; j < 3; ++j) {
      auto pp = p, pm = p;
      pp.mix_weights(j) += h;
      pm.mix_weights(j) -= h;
      EXPECT_LT(rel(g.grad_mix_weights(j), (loss(x, pp) - loss(x, pm)) / (2 * h)), 1e-5);
    }
  }
}

TEST(LayerBackward, TiedCoefficientsSumOverChannels) {
  std::mt19937_64 rng(11);
  auto tied = DiffusionLayerParams::make(6, {1, 2}, 0.2, true);
  auto untied = DiffusionLayerParams::make(6, {1, 2}, 0.2, false);
  const Eigen::MatrixXd x = random_matrix(rng, 12, 6), g = random_matrix(rng, 12, 6);
  const auto gt = backward(forward(SequenceField(x), tied).cache, g);
  const auto gu = backward(forward(SequenceField(x), untied).cache, g);
  EXPECT_LT((gt.grad_raw_alpha - Eigen::MatrixXd(gu.grad_raw_alpha.rowwise().sum())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(grad_check(tied, SequenceField(x), 5, 3), -1.0);
  EXPECT_LT(grad_check(tied, SequenceField(x), 5, 3), 1e-7);
}

TEST(GradCheck, LinearPath) {
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = random_params(rng, 4, false);
    EXPECT_LT(grad_check(p, SequenceField(random_matrix(rng, 16, 4)), 10, seed), 1e-7);
  }
}

TEST(GradCheck, PostNormPath) {
  std::mt19937_64 rng(13);
  const auto p = random_params(rng, 8, true);
  EXPECT_LT(grad_check(p, SequenceField(random_matrix(rng, 16, 8)), 20, 1), 1e-5);
}

TEST(GradCheck, SmallestCase) {
  std::mt19937_64 rng(14);
  auto p = DiffusionLayerParams::make(1, {1});
  p.raw_alpha(0, 0) = 0.3;
  EXPECT_LT(grad_check(p, SequenceField(random_matrix(rng, 2, 1)), 10, 2), 1e-7);
}

TEST(ScaleCap, HeadLatticeShorterThanScales) {
  std::mt19937_64 rng(15);
  const auto p = DiffusionLayerParams::make(4);
  const SequenceField single(random_matrix(rng, 1, 4));
  EXPECT_EQ(forward(single, p, ForwardOptions{0}).out.values(), single.values());
  const SequenceField four(random_matrix(rng, 4, 4));
  const auto capped = forward(four, p, ForwardOptions{3});
  EXPECT_EQ(capped.cache.scales_used, (std::vector<int>{1, 2, 3}));
  EXPECT_LT((capped.out.channel_means() - four.channel_means()).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace pdelab
