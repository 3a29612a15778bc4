#include "pdelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "pdelab/errors.hpp"

namespace pdelab {

Eigen::VectorXd eigenvalues(Eigen::Index length) {
  if (length < 1) throw InvalidArgument("eigenvalues: length must be >= 1");
  Eigen::VectorXd lambda(length);
  for (Eigen::Index k = 0; k < length; ++k) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(k) / (2.0 * length));
    lambda(k) = -4.0 * s * s;
  }
  return lambda;
}

Eigen::MatrixXd dct_basis(Eigen::Index length) {
  if (length < 1) throw InvalidArgument("dct_basis: length must be >= 1");
  Eigen::MatrixXd basis(length, length);
  const double n = static_cast<double>(length);
  for (Eigen::Index k = 0; k < length; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (Eigen::Index i = 0; i < length; ++i) {
      basis(i, k) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    }
  }
  return basis;
}

SpectralProfile spectral_profile(Eigen::Index length) {
  return SpectralProfile{length, eigenvalues(length), dct_basis(length)};
}

double frequency_response(double omega, int scale, double alpha) {
  const double s = std::sin(omega * scale / 2.0);
  return 1.0 - 4.0 * alpha * s * s;
}

Eigen::MatrixXd heat_kernel(Eigen::Index length, double t) {
  if (t < 0.0) throw InvalidArgument("heat_kernel: t must be nonnegative");
  const SpectralProfile profile = spectral_profile(length);
  const Eigen::VectorXd decay = (profile.eigenvalues * t).array().exp().matrix();
  return profile.basis * decay.asDiagonal() * profile.basis.transpose();
}

std::vector<FrequencyBand> quarter_bands() {
  constexpr double pi = std::numbers::pi;
  return {{"low", 0.0, pi / 4}, {"mid-low", pi / 4, pi / 2}, {"mid-high", pi / 2, 3 * pi / 4},
          {"high", 3 * pi / 4, pi}};
}

std::vector<double> band_energy(int scale, double alpha, const std::vector<FrequencyBand>& bands,
                                int samples) {
  if (bands.empty()) throw InvalidArgument("band_energy: empty band list");
  if (samples < 1) throw InvalidArgument("band_energy: samples must be >= 1");
  std::vector<double> energy;
  energy.reserve(bands.size());
  for (const auto& band : bands) {
    if (!(band.omega_lo >= 0.0 && band.omega_lo < band.omega_hi && band.omega_hi <= std::numbers::pi)) {
      throw InvalidArgument("band_energy: malformed band '" + band.label + "'");
    }
    double acc = 0.0;
    for (int j = 0; j < samples; ++j) {
      const double frac = samples == 1 ? 0.5 : static_cast<double>(j) / (samples - 1);
      const double h = frequency_response(band.omega_lo + frac * (band.omega_hi - band.omega_lo), scale, alpha);
      acc += h * h;
    }
    energy.push_back(acc / samples);
  }
  return energy;
}

MultiscaleFit fit_multiscale_weights(const std::vector<int>& scales, double omega_max, int grid_points) {
  if (scales.empty()) throw InvalidArgument("fit_multiscale_weights: need at least one scale");
  if (!(omega_max > 0.0 && omega_max <= std::numbers::pi)) {
    throw InvalidArgument("fit_multiscale_weights: omega_max must lie in (0, pi]");
  }
  if (grid_points < 2) throw InvalidArgument("fit_multiscale_weights: need at least two grid points");
  for (int h : scales) {
    if (h < 1) throw InvalidArgument("fit_multiscale_weights: scales must be >= 1");
  }
  if (std::set<int>(scales.begin(), scales.end()).size() != scales.size()) {
    throw SingularSystem("fit_multiscale_weights: duplicate scales make the system rank deficient");
  }

  const Eigen::Index k = static_cast<Eigen::Index>(scales.size());
  Eigen::MatrixXd design(grid_points, k);
  Eigen::VectorXd target(grid_points);
  for (int j = 0; j < grid_points; ++j) {
    const double omega = omega_max * j / (grid_points - 1);
    target(j) = -omega * omega;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double h = scales[static_cast<std::size_t>(c)];
      const double s = std::sin(omega * h / 2.0);
      design(j, c) = -4.0 / (h * h) * s * s;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) throw SingularSystem("fit_multiscale_weights: design matrix is rank deficient");
  const Eigen::VectorXd w = qr.solve(target);

  MultiscaleFit fit;
  fit.weights.assign(w.data(), w.data() + w.size());
  fit.rms_error = std::sqrt((design * w - target).squaredNorm() / grid_points);
  return fit;
}

}  // namespace pdelab
