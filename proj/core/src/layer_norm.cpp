#include "pdelab/layer_norm.hpp"

#include <cmath>

namespace pdelab {

Eigen::MatrixXd layer_norm_forward(const Eigen::MatrixXd& x, LayerNormCache& cache, double eps) {
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Eigen::MatrixXd centered = x.colwise() - mean;
  const Eigen::VectorXd var = centered.rowwise().squaredNorm() / static_cast<double>(d);
  cache.inv_std = (var.array() + eps).rsqrt().matrix();
  cache.normalized = cache.inv_std.asDiagonal() * centered;
  return cache.normalized;
}

Eigen::MatrixXd layer_norm_inference(const Eigen::MatrixXd& x, double eps) {
  LayerNormCache cache;
  return layer_norm_forward(x, cache, eps);
}

Eigen::MatrixXd layer_norm_backward(const LayerNormCache& cache, const Eigen::MatrixXd& grad_normalized) {
  const double d = static_cast<double>(grad_normalized.cols());
  const Eigen::VectorXd mean_g = grad_normalized.rowwise().sum() / d;
  const Eigen::VectorXd mean_gy = (grad_normalized.cwiseProduct(cache.normalized)).rowwise().sum() / d;
  Eigen::MatrixXd g = grad_normalized.colwise() - mean_g;
  g -= mean_gy.asDiagonal() * cache.normalized;
  return cache.inv_std.asDiagonal() * g;
}

}  // namespace pdelab
