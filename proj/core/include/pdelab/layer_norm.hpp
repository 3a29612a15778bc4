#pragma once

#include <Eigen/Dense>

namespace pdelab {

inline constexpr double kLayerNormEps = 1e-5;

/// Row-wise normalisation: each position (row) is shifted to zero mean and
/// scaled to unit variance over its channels (columns).
struct LayerNormCache {
  Eigen::MatrixXd normalized;  // x_hat
  Eigen::VectorXd inv_std;     // per row
};

Eigen::MatrixXd layer_norm_forward(const Eigen::MatrixXd& x, LayerNormCache& cache,
                                   double eps = kLayerNormEps);

Eigen::MatrixXd layer_norm_inference(const Eigen::MatrixXd& x, double eps = kLayerNormEps);

/// Gradient with respect to x given the gradient with respect to x_hat.
Eigen::MatrixXd layer_norm_backward(const LayerNormCache& cache, const Eigen::MatrixXd& grad_normalized);

}  // namespace pdelab
