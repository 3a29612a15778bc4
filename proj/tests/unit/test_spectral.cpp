#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "pdelab/errors.hpp"
#include "pdelab/field.hpp"
#include "pdelab/spectral.hpp"

namespace pdelab {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd dense_eigenvalues_descending(Eigen::Index n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_matrix(n, StencilSpec{1}));
  Eigen::VectorXd ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

TEST(Eigenvalues, ClosedFormMatchesDenseEigendecomposition) {
  for (Eigen::Index n : {2, 4, 8, 16, 32}) {
    const Eigen::VectorXd closed = eigenvalues(n);
    const Eigen::VectorXd dense = dense_eigenvalues_descending(n);
    EXPECT_LT((closed - dense).cwiseAbs().maxCoeff(), 1e-10) << "L=" << n;
  }
}

TEST(Eigenvalues, KnownValues) {
  const Eigen::VectorXd two = eigenvalues(2);
  EXPECT_NEAR(two(0), 0.0, 1e-15);
  EXPECT_NEAR(two(1), -2.0, 1e-14);
  // -4 sin^2(pi/8) = -(2 - sqrt 2)
  EXPECT_NEAR(eigenvalues(4)(1), -0.5857864376269049, 1e-14);
  EXPECT_NEAR(dense_eigenvalues_descending(4)(1), -0.5857864376269049, 1e-12);
  for (Eigen::Index n : {1, 3, 17}) EXPECT_EQ(eigenvalues(n)(0), 0.0);
}

TEST(Eigenvalues, StrictlyDecreasingInsideRange) {
  for (Eigen::Index n = 2; n <= 64; ++n) {
    const Eigen::VectorXd ev = eigenvalues(n);
    for (Eigen::Index k = 1; k < n; ++k) {
      EXPECT_LT(ev(k), ev(k - 1));
      EXPECT_GE(ev(k), -4.0);
    }
  }
}

TEST(DctBasis, SmallCases) {
  EXPECT_EQ(dct_basis(1), Eigen::MatrixXd::Ones(1, 1));
  const Eigen::MatrixXd b = dct_basis(2);
  EXPECT_NEAR(b(0, 0), b(1, 0), 1e-15);
  EXPECT_NEAR(b(0, 1), -b(1, 1), 1e-15);
  EXPECT_NEAR(std::abs(b(0, 0)), std::sqrt(0.5), 1e-15);
}

TEST(DctBasis, OrthonormalEigenvectors) {
  for (Eigen::Index n = 1; n <= 32; ++n) {
    const SpectralProfile profile = spectral_profile(n);
    const Eigen::MatrixXd gram = profile.basis.transpose() * profile.basis;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd m = laplacian_matrix(n, StencilSpec{1});
    const Eigen::MatrixXd residual = m * profile.basis - profile.basis * profile.eigenvalues.asDiagonal();
    EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(FrequencyResponse, ClosedFormValues) {
  for (int h : {1, 2, 4}) EXPECT_EQ(frequency_response(0.0, h, 0.37), 1.0);
  EXPECT_NEAR(frequency_response(kPi / 2, 1, 0.1), 0.8, 1e-15);
  EXPECT_NEAR(frequency_response(kPi, 1, 0.25), 0.0, 1e-15);
}

TEST(FrequencyResponse, AlternatingModeIsAnnihilatedAtQuarterAlpha) {
  // On the lattice the highest cosine mode is the closest thing to omega = pi;
  // its per-step gain is exactly 1 + alpha lambda_{L-1}, which tends to
  // H(pi) = 0 as L grows.
  for (Eigen::Index n : {16, 64, 256}) {
    const Eigen::MatrixXd basis = dct_basis(n);
    const auto out = diffusion_step(SequenceField(Eigen::MatrixXd(basis.col(n - 1))), 0.25, StencilSpec{1});
    const double gain = out.values().col(0).dot(basis.col(n - 1));
    const double omega = kPi * (n - 1) / n;
    EXPECT_NEAR(gain, frequency_response(omega, 1, 0.25), 1e-12);
    EXPECT_LT(std::abs(gain), 10.0 / (n * n));
  }
}

TEST(HeatKernel, IdentityAtTimeZero) {
  for (Eigen::Index n : {1, 5, 16}) {
    EXPECT_LT((heat_kernel(n, 0.0) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(heat_kernel(4, -1.0), InvalidArgument);
}

TEST(HeatKernel, MatchesMatrixExponentialOracle) {
  for (Eigen::Index n : {3, 8, 20}) {
    for (double t : {0.5, 2.0, 7.0}) {
      const Eigen::MatrixXd oracle = (t * laplacian_matrix(n, StencilSpec{1})).exp();
      EXPECT_LT((heat_kernel(n, t) - oracle).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(HeatKernel, StochasticSymmetricNonnegative) {
  for (Eigen::Index n : {2, 7, 32, 64}) {
    for (double t : {1.0, 4.0, 16.0}) {
      const Eigen::MatrixXd k = heat_kernel(n, t);
      EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((k.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-8);
      EXPECT_GE(k.minCoeff(), -1e-10);
    }
  }
}

TEST(HeatKernel, Semigroup) {
  for (Eigen::Index n : {8, 33, 64}) {
    for (double t : {1.0, 2.0, 4.0}) {
      for (double s : {1.0, 2.0, 4.0}) {
        const Eigen::MatrixXd lhs = heat_kernel(n, t + s);
        const Eigen::MatrixXd rhs = heat_kernel(n, t) * heat_kernel(n, s);
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
      }
    }
  }
}

TEST(HeatKernel, GaussianEnvelopeSlope) {
  const Eigen::Index n = 256;
  const double t = 32.0;
  const Eigen::MatrixXd k = heat_kernel(n, t);
  const Eigen::Index x = n / 2;
  const int reach = static_cast<int>(std::floor(3.0 * std::sqrt(2.0 * t)));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int r = 1; r <= reach; ++r) {
    for (int sign : {-1, 1}) {
      const double xr = static_cast<double>(r) * r;
      const double y = std::log(k(x, x + sign * r));
      sx += xr;
      sy += y;
      sxx += xr * xr;
      sxy += xr * y;
      ++m;
    }
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double expected = -1.0 / (4.0 * t);
  EXPECT_NEAR(slope, expected, 0.25 * std::abs(expected));
}

TEST(BandEnergy, UnitWithoutDiffusion) {
  for (double e : band_energy(2, 0.0, quarter_bands(), 64)) EXPECT_DOUBLE_EQ(e, 1.0);
}

TEST(BandEnergy, VanishesNearNyquistAtQuarterAlpha) {
  double previous = 1.0;
  for (double eps : {0.5, 0.1, 0.01, 0.001}) {
    const auto e = band_energy(1, 0.25, {{"top", kPi - eps, kPi}}, 257);
    EXPECT_LT(e[0], previous);
    previous = e[0];
  }
  EXPECT_LT(previous, 1e-12);
}

TEST(BandEnergy, CoarseScaleComparisonFollowsTheAliasedResponse) {
  // sin^2(omega h / 2) is periodic, so H_4 rises again on [3pi/4, pi] while
  // H_1 is near its minimum there; on [pi/4, pi/2] the order flips.
  auto trapezoid = [](int h, double lo, double hi) {
    const int n = 20000;
    double acc = 0;
    for (int j = 0; j <= n; ++j) {
      const double v = frequency_response(lo + (hi - lo) * j / n, h, 0.1);
      acc += (j == 0 || j == n ? 0.5 : 1.0) * v * v;
    }
    return acc / n;
  };
  const std::vector<FrequencyBand> high{{"high", 3 * kPi / 4, kPi}};
  const std::vector<FrequencyBand> mid_low{{"mid-low", kPi / 4, kPi / 2}};
  const double fine_high = band_energy(1, 0.1, high, 1024)[0];
  const double coarse_high = band_energy(4, 0.1, high, 1024)[0];
  EXPECT_NEAR(fine_high, trapezoid(1, 3 * kPi / 4, kPi), 1e-3);
  EXPECT_NEAR(coarse_high, trapezoid(4, 3 * kPi / 4, kPi), 1e-3);
  EXPECT_GT(coarse_high, fine_high);
  EXPECT_LT(band_energy(4, 0.1, mid_low, 1024)[0], band_energy(1, 0.1, mid_low, 1024)[0]);
}

TEST(BandEnergy, DcBandDominates) {
  for (int h : {1, 2, 4}) {
    for (double alpha : {0.05, 0.2, 0.45}) {
      const auto e = band_energy(h, alpha, quarter_bands(), 256);
      for (std::size_t b = 1; b < e.size(); ++b) EXPECT_GE(e[0], e[b] - 1e-12) << "h=" << h << " alpha=" << alpha;
    }
  }
}

TEST(BandEnergy, Errors) {
  EXPECT_THROW(band_energy(1, 0.1, {}, 16), InvalidArgument);
  EXPECT_THROW(band_energy(1, 0.1, {{"bad", 1.0, 0.5}}, 16), InvalidArgument);
  EXPECT_THROW(band_energy(1, 0.1, {{"bad", 0.0, 4.0}}, 16), InvalidArgument);
}

TEST(FitMultiscale, SingleScaleSmallOmegaLimit) {
  const auto fit = fit_multiscale_weights({1}, 1e-3, 64);
  EXPECT_NEAR(fit.weights[0], 1.0, 1e-6);
  EXPECT_LT(fit.rms_error, 1e-12);
}

TEST(FitMultiscale, ErrorStrictlyDecreasesAlongGeometricLadder) {
  const std::vector<std::vector<int>> ladder{{1}, {1, 2}, {1, 2, 4}, {1, 2, 4, 8}};
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& scales : ladder) {
    const auto fit = fit_multiscale_weights(scales, kPi / 2, 512);
    EXPECT_LT(fit.rms_error, previous);
    previous = fit.rms_error;
  }
}

TEST(FitMultiscale, SolvesTheNormalEquations) {
  // Oracle: explicit normal equations via LLT on A^T A.
  const std::vector<int> scales{1, 2, 4};
  const int n = 512;
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (int j = 0; j < n; ++j) {
    const double w = (kPi / 2) * j / (n - 1);
    b(j) = -w * w;
    for (int c = 0; c < 3; ++c) {
      const double h = scales[c];
      a(j, c) = -4.0 / (h * h) * std::pow(std::sin(w * h / 2), 2);
    }
  }
  const Eigen::VectorXd oracle = (a.transpose() * a).llt().solve(a.transpose() * b);
  const auto fit = fit_multiscale_weights(scales, kPi / 2, n);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(fit.weights[c], oracle(c), 1e-6 * std::abs(oracle(c)) + 1e-9);
}

TEST(FitMultiscale, DuplicateScalesAreSingular) {
  EXPECT_THROW(fit_multiscale_weights({1, 1}, kPi / 2, 64), SingularSystem);
  EXPECT_THROW(fit_multiscale_weights({}, kPi / 2, 64), InvalidArgument);
}

}  // namespace
}  // namespace pdelab
