#include "pdelab/diffusion_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "pdelab/errors.hpp"

namespace pdelab {

namespace {

// Target of the per-channel rescale when the combined coefficient reaches the bound.
constexpr double kCflMargin = 1e-6;

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double constrain_alpha(double raw, double bound) {
  if (!(bound > 0.0)) throw InvalidArgument("constrain_alpha: bound must be positive");
  const double alpha = bound * sigmoid(raw);
  // sigmoid saturates to exactly 0 or 1 in double precision; keep the open interval.
  if (alpha >= bound) return std::nextafter(bound, 0.0);
  if (alpha <= 0.0) return std::numeric_limits<double>::denorm_min();
  return alpha;
}

double unconstrain_alpha(double alpha, double bound) {
  if (!(alpha > 0.0 && alpha < bound)) throw InvalidArgument("unconstrain_alpha: alpha must lie in (0, bound)");
  const double p = alpha / bound;
  return std::log(p / (1.0 - p));
}

DiffusionLayerParams DiffusionLayerParams::make(Eigen::Index channels, std::vector<int> scales, double alpha_init,
                                                bool tied) {
  DiffusionLayerParams p;
  p.scales = std::move(scales);
  p.tied = tied;
  const Eigen::Index k = p.scale_count();
  p.raw_alpha = Eigen::MatrixXd::Constant(k, tied ? 1 : channels, unconstrain_alpha(alpha_init, p.alpha_bound));
  p.mix_weights.resize(k);
  constexpr double kInit[] = {1.0, 0.6, 0.3};
  for (Eigen::Index i = 0; i < k; ++i) p.mix_weights(i) = i < 3 ? kInit[i] : 0.5 * p.mix_weights(i - 1);
  p.validate();
  return p;
}

void DiffusionLayerParams::validate() const {
  if (scales.empty()) throw InvalidArgument("diffusion layer needs at least one scale");
  for (int h : scales) {
    if (h < 1) throw InvalidArgument("diffusion layer scales must be >= 1");
  }
  if (std::set<int>(scales.begin(), scales.end()).size() != scales.size()) {
    throw InvalidArgument("diffusion layer scales must be distinct");
  }
  if (raw_alpha.rows() != scale_count() || mix_weights.size() != scale_count()) {
    throw DimensionMismatch("diffusion layer: raw_alpha / mix_weights rows must equal the number of scales");
  }
  if (tied && raw_alpha.cols() != 1) throw DimensionMismatch("tied diffusion layer keeps one coefficient column");
  if (raw_alpha.cols() < 1) throw DimensionMismatch("diffusion layer needs at least one coefficient column");
  if (!(alpha_bound > 0.0)) throw InvalidArgument("alpha_bound must be positive");
}

void DiffusionLayerParams::set_uniform_alpha(double alpha) {
  raw_alpha.setConstant(unconstrain_alpha(alpha, alpha_bound));
}

namespace {

Eigen::MatrixXd constrained_alphas(const DiffusionLayerParams& params, Eigen::Index channels) {
  if (!params.tied && params.raw_alpha.cols() != channels) {
    throw DimensionMismatch("diffusion layer has " + std::to_string(params.raw_alpha.cols()) +
                            " coefficient channels, field has " + std::to_string(channels));
  }
  Eigen::MatrixXd alpha(params.scale_count(), channels);
  for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      alpha(k, c) = constrain_alpha(params.raw_alpha(k, params.tied ? 0 : c), params.alpha_bound);
    }
  }
  return alpha;
}

// Applies the combined CFL rule in place; returns per-channel sums before it.
Eigen::VectorXd enforce_combined_cfl(const DiffusionLayerParams& params, const Eigen::MatrixXd& alpha,
                                     Eigen::MatrixXd& effective, Eigen::Array<bool, Eigen::Dynamic, 1>& rescaled) {
  const Eigen::VectorXd abs_w = params.mix_weights.cwiseAbs();
  Eigen::VectorXd sums = alpha.transpose() * abs_w;
  effective = alpha;
  rescaled.setConstant(alpha.cols(), false);
  for (Eigen::Index c = 0; c < alpha.cols(); ++c) {
    if (sums(c) >= params.alpha_bound) {
      effective.col(c) *= (params.alpha_bound - kCflMargin) / sums(c);
      rescaled(c) = true;
    }
  }
  return sums;
}

}  // namespace

Eigen::MatrixXd effective_alphas(const DiffusionLayerParams& params, Eigen::Index channels) {
  const Eigen::MatrixXd alpha = constrained_alphas(params, channels);
  Eigen::MatrixXd effective;
  Eigen::Array<bool, Eigen::Dynamic, 1> rescaled;
  enforce_combined_cfl(params, alpha, effective, rescaled);
  return effective;
}

Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, LayerCache& cache,
                        ForwardOptions options) {
  params.validate();
  const Eigen::Index length = x.rows();
  cache.params = params;
  cache.scales_used = params.scales;
  if (options.scale_cap) {
    const int cap = std::max(1, *options.scale_cap);
    for (int& h : cache.scales_used) h = std::min(h, cap);
  }
  for (int h : cache.scales_used) {
    if (length > 1 && h >= length) {
      throw InvalidStencil("diffusion layer scale " + std::to_string(h) + " must be smaller than the length " +
                           std::to_string(length));
    }
  }

  cache.input = x;
  cache.alpha = constrained_alphas(params, x.cols());
  cache.channel_sum = enforce_combined_cfl(params, cache.alpha, cache.alpha_effective, cache.rescaled);

  Eigen::MatrixXd y = x;
  cache.laplacians.resize(cache.scales_used.size());
  for (std::size_t k = 0; k < cache.scales_used.size(); ++k) {
    laplacian_into(x, StencilSpec{cache.scales_used[k], params.boundary}, cache.laplacians[k]);
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    const double w = params.mix_weights(kk);
    y.noalias() += cache.laplacians[k] * (w * cache.alpha_effective.row(kk).transpose()).asDiagonal();
  }
  if (params.post_norm) return layer_norm_forward(y, cache.norm);
  return y;
}

Eigen::MatrixXd apply(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, ForwardOptions options) {
  Eigen::MatrixXd y;
  apply_into(x, params, y, options);
  return y;
}

void apply_into(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, Eigen::MatrixXd& y,
                ForwardOptions options) {
  params.validate();
  const Eigen::Index n = x.rows();
  std::vector<int> scales = params.scales;
  if (options.scale_cap) {
    const int cap = std::max(1, *options.scale_cap);
    for (int& h : scales) h = std::min(h, cap);
  }
  for (int h : scales) {
    if (n > 1 && h >= n) {
      throw InvalidStencil("diffusion layer scale " + std::to_string(h) + " must be smaller than the length " +
                           std::to_string(n));
    }
  }
  const Eigen::MatrixXd eff = effective_alphas(params, x.cols());
  if (n == 1) {
    y = params.post_norm ? layer_norm_inference(x) : x;
    return;
  }
  y.resize(n, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    y.col(c) = x.col(c);
    const double* in = x.col(c).data();
    double* out = y.col(c).data();
    for (std::size_t k = 0; k < scales.size(); ++k) {
      const int h = scales[k];
      const double a = params.mix_weights(static_cast<Eigen::Index>(k)) * eff(static_cast<Eigen::Index>(k), c);
      const Eigen::Index lo = std::min<Eigen::Index>(h, n);
      const Eigen::Index hi = std::max<Eigen::Index>(n - h, lo);
      for (Eigen::Index i = lo; i < hi; ++i) out[i] += a * (in[i - h] - 2.0 * in[i] + in[i + h]);
      auto edge = [&](Eigen::Index i) {
        out[i] += a * (in[neighbor_index(i, -h, n, params.boundary)] - 2.0 * in[i] +
                       in[neighbor_index(i, h, n, params.boundary)]);
      };
      for (Eigen::Index i = 0; i < lo; ++i) edge(i);
      for (Eigen::Index i = hi; i < n; ++i) edge(i);
    }
  }
  if (params.post_norm) y = layer_norm_inference(y);
}

LayerForward forward(const SequenceField& field, const DiffusionLayerParams& params, ForwardOptions options) {
  if (!field.all_finite()) throw InvalidArgument("diffusion layer: input contains non-finite values");
  LayerCache cache;
  Eigen::MatrixXd out = forward(field.values(), params, cache, options);
  return LayerForward{SequenceField(std::move(out)), std::move(cache)};
}

LayerGradients backward(const LayerCache& cache, const Eigen::MatrixXd& grad_out) {
  const auto& params = cache.params;
  if (grad_out.rows() != cache.input.rows() || grad_out.cols() != cache.input.cols()) {
    throw DimensionMismatch("diffusion layer backward: gradient shape differs from the cached input");
  }
  const Eigen::Index k_count = params.scale_count();
  const Eigen::Index channels = cache.input.cols();

  const Eigen::MatrixXd g = params.post_norm ? layer_norm_backward(cache.norm, grad_out) : grad_out;

  LayerGradients grads;
  grads.grad_in = g;
  Eigen::MatrixXd lap;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double w = params.mix_weights(k);
    const Eigen::MatrixXd scaled = g * (w * cache.alpha_effective.row(k).transpose()).asDiagonal();
    laplacian_into(scaled, StencilSpec{cache.scales_used[static_cast<std::size_t>(k)], params.boundary}, lap);
    grads.grad_in += lap;
  }

  // inner(k, c) = <G_c, (Delta_k X)_c>
  Eigen::MatrixXd inner(k_count, channels);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    inner.row(k) = g.cwiseProduct(cache.laplacians[static_cast<std::size_t>(k)]).colwise().sum();
  }

  grads.grad_mix_weights = (cache.alpha_effective.cwiseProduct(inner)).rowwise().sum();
  Eigen::MatrixXd grad_alpha_eff = params.mix_weights.asDiagonal() * inner;

  Eigen::MatrixXd grad_alpha = grad_alpha_eff;
  for (Eigen::Index c = 0; c < channels; ++c) {
    if (!cache.rescaled(c)) continue;
    const double s = cache.channel_sum(c);
    const double gamma = (params.alpha_bound - kCflMargin) / s;
    const double dot = grad_alpha_eff.col(c).dot(cache.alpha.col(c));
    for (Eigen::Index j = 0; j < k_count; ++j) {
      const double w = params.mix_weights(j);
      const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
      grad_alpha(j, c) = gamma * grad_alpha_eff(j, c) - gamma * std::abs(w) * dot / s;
      grads.grad_mix_weights(j) -= gamma * sign * cache.alpha(j, c) * dot / s;
    }
  }

  // d alpha / d raw = bound * sigma * (1 - sigma) = alpha * (1 - alpha / bound)
  const Eigen::MatrixXd chain =
      cache.alpha.array() * (1.0 - cache.alpha.array() / params.alpha_bound);
  const Eigen::MatrixXd grad_raw_full = grad_alpha.cwiseProduct(chain);
  grads.grad_raw_alpha = params.tied ? Eigen::MatrixXd(grad_raw_full.rowwise().sum()) : grad_raw_full;
  return grads;
}

LayerGradients backward(const LayerCache& cache, const SequenceField& grad_out) {
  return backward(cache, grad_out.values());
}

double grad_check(const DiffusionLayerParams& params, const SequenceField& field, int trials, std::uint64_t seed,
                  double step) {
  if (trials < 1) throw InvalidArgument("grad_check needs at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_like = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = normal(rng);
    return m;
  };

  // loss = <R, out> + 1/2 |out|^2 with a fixed random R. The quadratic part
  // alone is nearly constant after post-normalisation, so R keeps the
  // directional derivatives well away from zero.
  const Eigen::MatrixXd weight = random_like(field.length(), field.channels());
  auto loss = [&](const Eigen::MatrixXd& x, const DiffusionLayerParams& p) {
    LayerCache cache;
    const Eigen::MatrixXd out = forward(x, p, cache);
    return out.cwiseProduct(weight).sum() + 0.5 * out.squaredNorm();
  };

  LayerCache cache;
  const Eigen::MatrixXd out = forward(field.values(), params, cache);
  const LayerGradients grads = backward(cache, Eigen::MatrixXd(weight + out));

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd dx = random_like(field.length(), field.channels());
    Eigen::MatrixXd draw = random_like(params.raw_alpha.rows(), params.raw_alpha.cols());
    Eigen::VectorXd dw = random_like(params.mix_weights.size(), 1);
    const double norm = std::sqrt(dx.squaredNorm() + draw.squaredNorm() + dw.squaredNorm());
    dx /= norm;
    draw /= norm;
    dw /= norm;

    const double analytic =
        (grads.grad_in.cwiseProduct(dx)).sum() + (grads.grad_raw_alpha.cwiseProduct(draw)).sum() +
        grads.grad_mix_weights.dot(dw);

    DiffusionLayerParams plus = params, minus = params;
    plus.raw_alpha += step * draw;
    minus.raw_alpha -= step * draw;
    plus.mix_weights += step * dw;
    minus.mix_weights -= step * dw;
    const double numeric =
        (loss(field.values() + step * dx, plus) - loss(field.values() - step * dx, minus)) / (2.0 * step);

    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e-12) continue;
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace pdelab
