#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdelab/diffusion_layer.hpp"
#include "pdelab/tasks.hpp"

namespace pdelab {

enum class IntegrationPosition {
  None,
  AfterEmbedding,
  AfterMlp,
  LayerDiffusion,
  BeforeLayerNorm,
  InAttention,
  HeadDiffusion,
  AfterAttention,
};

const char* to_string(IntegrationPosition position);
IntegrationPosition position_from_string(const std::string& name);
/// Baseline first, then the seven diffusion variants.
std::vector<IntegrationPosition> all_positions();

struct ModelConfig {
  int dim = 64;
  int layers = 2;
  int heads = 4;
  int mlp_hidden = 256;
  int vocab = listops::kVocab;
  int max_len = 64;
  int num_classes = 10;
  IntegrationPosition position = IntegrationPosition::None;
  // Scales, bound, boundary, post_norm and tying are taken from here; the
  // coefficient matrix is (re)built for the position's channel axis when its
  // shape does not match.
  DiffusionLayerParams pde;
  double pde_alpha_init = 0.1;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  int head_dim() const { return dim / heads; }
  /// Channel count the diffusion layer sees at this position.
  int pde_channels() const;
  void validate() const;
};

using ParameterList = std::vector<Eigen::MatrixXd>;

struct SampleCache;

class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  bool has_pde() const { return config_.position != IntegrationPosition::None; }

  /// All trainable tensors; the diffusion coefficients and mix weights (if
  /// any) are the last two entries.
  ParameterList& parameters() { return params_; }
  const ParameterList& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  bool is_pde_parameter(std::size_t index) const { return has_pde() && index + 2 >= params_.size(); }

  Eigen::Index parameter_count() const;
  Eigen::Index pde_parameter_count() const;
  Eigen::Index baseline_parameter_count() const { return parameter_count() - pde_parameter_count(); }

  /// Current diffusion parameters (only meaningful when has_pde()).
  DiffusionLayerParams pde_params() const;
  void set_pde_params(const DiffusionLayerParams& params);

  /// Inference logits (no dropout) for one sequence.
  Eigen::VectorXd logits(std::span<const int> tokens) const;
  /// B x num_classes.
  Eigen::MatrixXd logits(std::span<const Example> batch) const;
  int predict(std::span<const int> tokens) const;
  double accuracy(std::span<const Example> examples) const;

  ParameterList zero_gradients() const;

  /// Lattice length a sequence is run at: trailing padding is dropped, then
  /// the sequence is padded back up to the largest diffusion scale + 1 when
  /// diffusion runs along the sequence axis.
  Eigen::Index run_length(std::span<const int> tokens) const;

  /// Adds the gradients of the summed cross-entropy over `batch` into
  /// `grads` and returns the summed loss. Dropout masks draw from `rng`
  /// when `dropout` > 0.
  double accumulate_gradients(std::span<const Example> batch, double dropout, std::mt19937_64& rng,
                              ParameterList& grads) const;

 private:
  double forward_sample(std::span<const int> tokens, double dropout, std::mt19937_64* rng,
                        SampleCache* cache, Eigen::VectorXd* logits_out) const;
  void backward_sample(const SampleCache& cache, const Eigen::VectorXd& grad_logits,
                       ParameterList& grads) const;

  ModelConfig config_;
  ParameterList params_;
  std::vector<std::string> names_;
};

/// Validates the config and returns a freshly initialised model. Non-PDE
/// tensors depend only on the seed and the architecture, so every position
/// variant starts from the same baseline weights.
Model build_model(const ModelConfig& config);

}  // namespace pdelab
