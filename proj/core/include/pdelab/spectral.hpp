#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pdelab {

/// Eigen-structure of the h = 1 Neumann Laplacian on L points.
struct SpectralProfile {
  Eigen::Index length = 0;
  Eigen::VectorXd eigenvalues;  // lambda_k, k = 0 .. L-1
  Eigen::MatrixXd basis;        // orthonormal columns phi_k
};

/// lambda_k = -4 sin^2(pi k / (2L)).
Eigen::VectorXd eigenvalues(Eigen::Index length);

/// Orthonormal DCT-II basis; column k is proportional to cos(pi k (2i+1) / (2L)).
Eigen::MatrixXd dct_basis(Eigen::Index length);

SpectralProfile spectral_profile(Eigen::Index length);

/// Gain of one diffusion step at scale h on the frequency omega:
/// 1 - 4 alpha sin^2(omega h / 2).
double frequency_response(double omega, int scale, double alpha);

/// exp(t * Delta_N) assembled from the cosine eigenbasis.
Eigen::MatrixXd heat_kernel(Eigen::Index length, double t);

struct FrequencyBand {
  std::string label;
  double omega_lo = 0.0;
  double omega_hi = 0.0;
};

/// The four equal-width bands on [0, pi].
std::vector<FrequencyBand> quarter_bands();

/// Mean of H_h(omega)^2 over `samples` uniformly spaced points of each band
/// (endpoints included).
std::vector<double> band_energy(int scale, double alpha, const std::vector<FrequencyBand>& bands,
                                int samples);

struct MultiscaleFit {
  std::vector<double> weights;
  double rms_error = 0.0;
};

/// Least-squares weights a_k such that sum_k a_k (-4/h_k^2) sin^2(omega h_k/2)
/// approximates -omega^2 on a uniform grid of [0, omega_max].
MultiscaleFit fit_multiscale_weights(const std::vector<int>& scales, double omega_max,
                                     int grid_points);

}  // namespace pdelab
