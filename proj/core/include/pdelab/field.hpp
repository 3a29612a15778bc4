#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace pdelab {

/// A discretized sequence field: `length()` positions by `channels()` real
/// channels. Storage is column-major so each channel is contiguous, which is
/// the layout every stencil in this library walks.
class SequenceField {
 public:
  SequenceField(Eigen::Index length, Eigen::Index channels);
  explicit SequenceField(Eigen::MatrixXd values);

  static SequenceField zeros(Eigen::Index length, Eigen::Index channels);
  static SequenceField constant(Eigen::Index length, Eigen::Index channels, double value);
  /// Single-channel field from a list of values.
  static SequenceField column(std::span<const double> values);

  Eigen::Index length() const { return values_.rows(); }
  Eigen::Index channels() const { return values_.cols(); }

  double& operator()(Eigen::Index i, Eigen::Index c) { return values_(i, c); }
  double operator()(Eigen::Index i, Eigen::Index c) const { return values_(i, c); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  bool all_finite() const { return values_.allFinite(); }
  Eigen::VectorXd channel_means() const;

 private:
  Eigen::MatrixXd values_;
};

enum class BoundaryMode {
  // Half-sample reflection: index 0 - j maps to j - 1. Diagonalised by the
  // DCT-II basis for every step size.
  NeumannReflect,
  // A neighbor that falls off the lattice is replaced by the point's own
  // value (replicate padding on each stride-h sublattice).
  ReplicateClamp,
};

const char* to_string(BoundaryMode mode);
BoundaryMode boundary_from_string(const std::string& name);

struct StencilSpec {
  int scale = 1;
  BoundaryMode boundary = BoundaryMode::NeumannReflect;
};

/// Index of the neighbor of `i` at signed offset `offset` on a lattice of
/// `length` points, after applying the boundary rule. Requires |offset| < length.
Eigen::Index neighbor_index(Eigen::Index i, int offset, Eigen::Index length, BoundaryMode mode);

/// Three-point Laplacian X[i-h] - 2 X[i] + X[i+h] per channel. Throws
/// InvalidStencil when h >= L (except L == 1, where the result is zero).
SequenceField laplacian(const SequenceField& field, const StencilSpec& stencil);

/// Writes the Laplacian of `in` into `out` (same shape, preallocated).
void laplacian_into(const Eigen::MatrixXd& in, const StencilSpec& stencil, Eigen::MatrixXd& out);

/// Dense L x L matrix of the same operator. Symmetric with zero row sums.
Eigen::MatrixXd laplacian_matrix(Eigen::Index length, const StencilSpec& stencil);

struct StepOptions {
  bool allow_unstable = false;
};

/// One explicit diffusion step X + alpha_c * Laplacian(X), alpha per channel.
/// Every alpha must lie in (0, 0.5) unless `allow_unstable` is set.
SequenceField diffusion_step(const SequenceField& field, std::span<const double> alpha,
                             const StencilSpec& stencil, StepOptions options = {});

/// Same, with one coefficient shared by all channels.
SequenceField diffusion_step(const SequenceField& field, double alpha, const StencilSpec& stencil,
                             StepOptions options = {});

/// Sum over channels of X^T (-Delta_N) X, i.e. the sum of squared first
/// differences along the sequence.
double dirichlet_energy(const SequenceField& field);

}  // namespace pdelab
