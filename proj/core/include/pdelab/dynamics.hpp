#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pdelab/field.hpp"

namespace pdelab {

/// Pointwise reaction potential F(u).
///
///   none                  F = 0
///   quadratic             F = (mu/2) u^2
///   anchored-quadratic    F = (mu/2) u^2 + (lambda/2) (u - u0)^2
///   double-well-anchored  F = (mu/4) (u^2 - 1)^2 + (lambda/2) (u - u0)^2
///
/// The double well is not convex; checks that rely on F'' >= mu skip it.
struct ReactionPotential {
  enum class Kind { None, Quadratic, AnchoredQuadratic, DoubleWellAnchored };

  Kind kind = Kind::None;
  double mu = 0.0;
  double lambda_anchor = 0.0;
  std::optional<SequenceField> anchor;

  static ReactionPotential none();
  static ReactionPotential quadratic(double mu);
  static ReactionPotential anchored_quadratic(double mu, double lambda, SequenceField anchor);
  static ReactionPotential double_well_anchored(double mu, double lambda, SequenceField anchor);

  bool convex() const { return kind != Kind::DoubleWellAnchored; }
  double value(double u, double u0) const;
  double derivative(double u, double u0) const;
  /// Upper bound of F'' used by the explicit-Euler budget.
  double curvature_bound() const { return mu + lambda_anchor; }

  /// Anchor value at (i, c), or 0 when there is none.
  double anchor_at(Eigen::Index i, Eigen::Index c) const;
};

/// Symmetric, nonnegative, zero-diagonal coupling matrix with strength beta.
struct CouplingKernel {
  Eigen::MatrixXd weights;
  double beta = 0.0;

  static CouplingKernel zero(Eigen::Index length);
  void validate() const;
  double max_row_sum() const;
};

struct FlowConfig {
  double alpha_diff = 0.0;
  ReactionPotential potential;
  CouplingKernel coupling;
  double dt = 0.01;
  int steps = 1;

  /// dt * (4 alpha + mu + lambda + 2 beta max_row_sum(K)); stable when < 2.
  double stability_number() const;
};

struct EnergyTrace {
  double dt = 0.0;
  std::vector<double> energy;
  std::vector<double> grad_norm;
  std::vector<double> dirichlet;
};

/// sum_y K(x, y) (u(x) - u(y)) per channel.
SequenceField nonlocal_term(const SequenceField& u, const CouplingKernel& coupling);

/// Discrete energy
///   sum (alpha/2) (u_{i+1} - u_i)^2 + sum F(u) + (beta/4) sum_{x,y} K(x,y) (u_x - u_y)^2.
/// The 1/4 makes its exact gradient the negative of flow_rhs.
double energy_functional(const SequenceField& u, const FlowConfig& config);

/// alpha Delta_N u - F'(u) - beta L_K[u].
SequenceField flow_rhs(const SequenceField& u, const FlowConfig& config);

struct FlowOptions {
  bool allow_unstable = false;
};

struct FlowResult {
  SequenceField u_final;
  EnergyTrace trace;
};

FlowResult run_flow(const SequenceField& u0, const FlowConfig& config, FlowOptions options = {});

struct DecayFit {
  double fitted_rate = 0.0;
  bool pass = false;
};

/// Least-squares slope of log ||dE/du|| against time over the first half of
/// the trace. Passes when the decay is at least 85% of the guaranteed mu.
DecayFit check_exponential_decay(const EnergyTrace& trace, double mu);

struct CoupledSystemConfig {
  std::vector<double> alpha;  // one per head
  Eigen::MatrixXd beta;       // H x H, symmetric, nonnegative, zero diagonal
  std::vector<ReactionPotential> potentials;
  double dt = 0.1;
  int steps = 1;

  Eigen::Index heads() const { return static_cast<Eigen::Index>(alpha.size()); }
  double stability_number() const;
};

struct SyncTrace {
  double dt = 0.0;
  std::vector<double> disagreement;  // V(t) = 1/2 sum_{i,j} ||u_i - u_j||^2
  std::vector<SequenceField> final_state;
};

/// 1/2 sum over ordered pairs of squared field differences.
double disagreement(const std::vector<SequenceField>& heads);

/// True when the graph with an edge wherever beta_ij > 0 is connected.
bool coupling_graph_connected(const Eigen::MatrixXd& beta);

SyncTrace simulate_coupled_heads(const CoupledSystemConfig& config,
                                 const std::vector<SequenceField>& initial, FlowOptions options = {});

}  // namespace pdelab
