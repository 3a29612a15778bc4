#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pdelab/field.hpp"
#include "pdelab/layer_norm.hpp"

namespace pdelab {

/// Learnable parameters of the multi-scale diffusion layer.
///
/// Coefficients are stored unconstrained; the layer only ever sees
/// alpha = alpha_bound * sigmoid(raw), so the per-coefficient CFL bound holds
/// by construction. With `tied` set, `raw_alpha` has a single column shared
/// by every channel.
struct DiffusionLayerParams {
  std::vector<int> scales{1, 2, 4};
  Eigen::MatrixXd raw_alpha;    // K x d (K x 1 when tied)
  Eigen::VectorXd mix_weights;  // K
  double alpha_bound = 0.5;
  bool post_norm = false;
  BoundaryMode boundary = BoundaryMode::NeumannReflect;
  bool tied = false;

  /// Every alpha at `alpha_init` and mix weights 1 : 0.6 : 0.3 for the first
  /// three scales; any further scale gets half the previous weight.
  static DiffusionLayerParams make(Eigen::Index channels, std::vector<int> scales = {1, 2, 4},
                                   double alpha_init = 0.1, bool tied = false);

  Eigen::Index scale_count() const { return static_cast<Eigen::Index>(scales.size()); }
  Eigen::Index parameter_count() const { return raw_alpha.size() + mix_weights.size(); }
  /// Throws InvalidArgument on malformed parameters (shape, duplicate scales, bound).
  void validate() const;
  /// Sets every raw coefficient so that alpha equals `alpha` exactly (up to rounding).
  void set_uniform_alpha(double alpha);
};

double sigmoid(double x);

/// bound * sigmoid(raw); strictly inside (0, bound).
double constrain_alpha(double raw, double bound);

/// Inverse of constrain_alpha for alpha in (0, bound).
double unconstrain_alpha(double alpha, double bound);

/// Constrained coefficients after the combined per-channel CFL rescale,
/// K x channels.
Eigen::MatrixXd effective_alphas(const DiffusionLayerParams& params, Eigen::Index channels);

struct LayerCache {
  DiffusionLayerParams params;
  std::vector<int> scales_used;
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> laplacians;
  Eigen::MatrixXd alpha;            // bound * sigmoid(raw), K x d
  Eigen::MatrixXd alpha_effective;  // after the per-channel rescale, K x d
  Eigen::VectorXd channel_sum;      // sum_k |w_k| alpha_kc before rescale
  Eigen::Array<bool, Eigen::Dynamic, 1> rescaled;
  LayerNormCache norm;
};

struct ForwardOptions {
  // Caps every scale at this value (used when the lattice is shorter than the
  // configured scales, e.g. diffusion across attention heads). Duplicated
  // scales after capping are allowed.
  std::optional<int> scale_cap;
};

struct LayerForward {
  SequenceField out;
  LayerCache cache;
};

/// Y = X + sum_k w_k (alpha_k (.) Delta_{h_k} X), then optional row-wise
/// LayerNorm. Exactly K Laplacian applications.
LayerForward forward(const SequenceField& field, const DiffusionLayerParams& params, ForwardOptions options = {});

/// Matrix form used by the transformer; fills `cache` and returns the output.
Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, LayerCache& cache,
                        ForwardOptions options = {});

/// Same output as forward without building a cache (inference path; one
/// sweep per channel).
Eigen::MatrixXd apply(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, ForwardOptions options = {});
/// Writes into `out`, reusing its storage when the shape already matches.
void apply_into(const Eigen::MatrixXd& x, const DiffusionLayerParams& params, Eigen::MatrixXd& out,
                ForwardOptions options = {});

struct LayerGradients {
  Eigen::MatrixXd grad_in;
  Eigen::MatrixXd grad_raw_alpha;  // same shape as params.raw_alpha
  Eigen::VectorXd grad_mix_weights;
};

/// Exact adjoint of forward (including the CFL rescale and, when enabled,
/// the post-normalisation).
LayerGradients backward(const LayerCache& cache, const Eigen::MatrixXd& grad_out);
LayerGradients backward(const LayerCache& cache, const SequenceField& grad_out);

/// Worst relative error between the analytic directional derivative and a
/// central finite difference of <R, out> + |out|^2 / 2 (R a fixed random
/// field), over `trials` random probe directions through input,
/// coefficients and mix weights.
double grad_check(const DiffusionLayerParams& params, const SequenceField& field, int trials,
                  std::uint64_t seed = 0, double step = 1e-5);

}  // namespace pdelab
