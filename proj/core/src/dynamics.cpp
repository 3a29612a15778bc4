#include "pdelab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pdelab/errors.hpp"

namespace pdelab {

ReactionPotential ReactionPotential::none() { return {}; }

ReactionPotential ReactionPotential::quadratic(double mu) {
  if (!(mu > 0.0)) throw InvalidArgument("quadratic potential needs mu > 0");
  ReactionPotential p;
  p.kind = Kind::Quadratic;
  p.mu = mu;
  return p;
}

ReactionPotential ReactionPotential::anchored_quadratic(double mu, double lambda, SequenceField anchor) {
  if (!(mu > 0.0) || lambda < 0.0) throw InvalidArgument("anchored potential needs mu > 0, lambda >= 0");
  ReactionPotential p;
  p.kind = Kind::AnchoredQuadratic;
  p.mu = mu;
  p.lambda_anchor = lambda;
  p.anchor = std::move(anchor);
  return p;
}

ReactionPotential ReactionPotential::double_well_anchored(double mu, double lambda, SequenceField anchor) {
  if (!(mu > 0.0) || lambda < 0.0) throw InvalidArgument("double-well potential needs mu > 0, lambda >= 0");
  ReactionPotential p;
  p.kind = Kind::DoubleWellAnchored;
  p.mu = mu;
  p.lambda_anchor = lambda;
  p.anchor = std::move(anchor);
  return p;
}

double ReactionPotential::anchor_at(Eigen::Index i, Eigen::Index c) const {
  return anchor ? (*anchor)(i, c) : 0.0;
}

double ReactionPotential::value(double u, double u0) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Quadratic:
      return 0.5 * mu * u * u;
    case Kind::AnchoredQuadratic:
      return 0.5 * mu * u * u + 0.5 * lambda_anchor * (u - u0) * (u - u0);
    case Kind::DoubleWellAnchored: {
      const double w = u * u - 1.0;
      return 0.25 * mu * w * w + 0.5 * lambda_anchor * (u - u0) * (u - u0);
    }
  }
  return 0.0;
}

double ReactionPotential::derivative(double u, double u0) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Quadratic:
      return mu * u;
    case Kind::AnchoredQuadratic:
      return mu * u + lambda_anchor * (u - u0);
    case Kind::DoubleWellAnchored:
      return mu * u * (u * u - 1.0) + lambda_anchor * (u - u0);
  }
  return 0.0;
}

CouplingKernel CouplingKernel::zero(Eigen::Index length) {
  return CouplingKernel{Eigen::MatrixXd::Zero(length, length), 0.0};
}

void CouplingKernel::validate() const {
  if (weights.rows() != weights.cols()) throw DimensionMismatch("coupling kernel must be square");
  if (beta < 0.0) throw InvalidArgument("coupling strength beta must be >= 0");
  if (weights != weights.transpose()) throw InvalidArgument("coupling kernel must be symmetric");
  if ((weights.array() < 0.0).any()) throw InvalidArgument("coupling kernel must be nonnegative");
  if (weights.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidArgument("coupling kernel must have a zero diagonal");
  }
}

double CouplingKernel::max_row_sum() const {
  return weights.size() == 0 ? 0.0 : weights.rowwise().sum().maxCoeff();
}

double FlowConfig::stability_number() const {
  return dt * (4.0 * alpha_diff + potential.curvature_bound() + 2.0 * coupling.beta * coupling.max_row_sum());
}

namespace {

void check_shapes(const SequenceField& u, const FlowConfig& config) {
  if (config.coupling.weights.rows() != u.length()) {
    throw DimensionMismatch("coupling kernel is " + std::to_string(config.coupling.weights.rows()) +
                            " wide but the field has " + std::to_string(u.length()) + " positions");
  }
  const auto& anchor = config.potential.anchor;
  if (anchor && (anchor->length() != u.length() || anchor->channels() != u.channels())) {
    throw DimensionMismatch("potential anchor shape differs from the field");
  }
}

}  // namespace

SequenceField nonlocal_term(const SequenceField& u, const CouplingKernel& coupling) {
  if (coupling.weights.rows() != u.length() || coupling.weights.cols() != u.length()) {
    throw DimensionMismatch("nonlocal_term: kernel size does not match the field length");
  }
  const Eigen::VectorXd degree = coupling.weights.rowwise().sum();
  Eigen::MatrixXd out = degree.asDiagonal() * u.values() - coupling.weights * u.values();
  return SequenceField(std::move(out));
}

double energy_functional(const SequenceField& u, const FlowConfig& config) {
  check_shapes(u, config);
  double tension = 0.5 * config.alpha_diff * dirichlet_energy(u);
  double reaction = 0.0;
  for (Eigen::Index c = 0; c < u.channels(); ++c) {
    for (Eigen::Index i = 0; i < u.length(); ++i) {
      reaction += config.potential.value(u(i, c), config.potential.anchor_at(i, c));
    }
  }
  double coupling = 0.0;
  if (config.coupling.beta != 0.0) {
    const auto& k = config.coupling.weights;
    for (Eigen::Index c = 0; c < u.channels(); ++c) {
      for (Eigen::Index x = 0; x < u.length(); ++x) {
        for (Eigen::Index y = 0; y < u.length(); ++y) {
          const double diff = u(x, c) - u(y, c);
          coupling += k(x, y) * diff * diff;
        }
      }
    }
    coupling *= 0.25 * config.coupling.beta;
  }
  return tension + reaction + coupling;
}

SequenceField flow_rhs(const SequenceField& u, const FlowConfig& config) {
  check_shapes(u, config);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(u.length(), u.channels());
  if (config.alpha_diff != 0.0) {
    Eigen::MatrixXd lap;
    laplacian_into(u.values(), StencilSpec{1, BoundaryMode::NeumannReflect}, lap);
    rhs += config.alpha_diff * lap;
  }
  for (Eigen::Index c = 0; c < u.channels(); ++c) {
    for (Eigen::Index i = 0; i < u.length(); ++i) {
      rhs(i, c) -= config.potential.derivative(u(i, c), config.potential.anchor_at(i, c));
    }
  }
  if (config.coupling.beta != 0.0) {
    rhs -= config.coupling.beta * nonlocal_term(u, config.coupling).values();
  }
  return SequenceField(std::move(rhs));
}

FlowResult run_flow(const SequenceField& u0, const FlowConfig& config, FlowOptions options) {
  check_shapes(u0, config);
  config.coupling.validate();
  if (!(config.dt > 0.0) || config.steps < 1) throw InvalidArgument("run_flow needs dt > 0 and steps >= 1");
  if (!options.allow_unstable && config.stability_number() >= 2.0) {
    throw StabilityBudgetExceeded("explicit-Euler budget dt*(4a + mu + lambda + 2 beta |K|) = " +
                                  std::to_string(config.stability_number()) + " must stay below 2");
  }

  FlowResult result{u0, {}};
  auto& trace = result.trace;
  trace.dt = config.dt;
  trace.energy.reserve(static_cast<std::size_t>(config.steps) + 1);

  SequenceField u = u0;
  SequenceField rhs = flow_rhs(u, config);
  auto record = [&] {
    trace.energy.push_back(energy_functional(u, config));
    trace.grad_norm.push_back(rhs.values().norm());
    trace.dirichlet.push_back(dirichlet_energy(u));
  };
  record();
  for (int step = 0; step < config.steps; ++step) {
    u.values() += config.dt * rhs.values();
    if (!u.all_finite()) throw Divergence("run_flow: field became non-finite at step " + std::to_string(step + 1));
    rhs = flow_rhs(u, config);
    record();
  }
  result.u_final = std::move(u);
  return result;
}

DecayFit check_exponential_decay(const EnergyTrace& trace, double mu) {
  const std::size_t window = trace.grad_norm.size() / 2 + 1;
  if (trace.grad_norm.size() < 3 || window < 2) throw FitWindowError("trace too short to fit a decay rate");
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t n = 0; n < window; ++n) {
    const double g = trace.grad_norm[n];
    if (!(g > 1e-14)) throw FitWindowError("gradient norm underflows inside the fit window");
    const double t = trace.dt * static_cast<double>(n);
    const double y = std::log(g);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double m = static_cast<double>(window);
  const double denom = m * stt - st * st;
  if (!(denom > 0.0)) throw FitWindowError("degenerate time axis in the fit window");
  DecayFit fit;
  fit.fitted_rate = (m * sty - st * sy) / denom;
  fit.pass = fit.fitted_rate <= -mu * (1.0 - 0.15);
  return fit;
}

double CoupledSystemConfig::stability_number() const {
  double alpha_max = 0.0;
  for (double a : alpha) alpha_max = std::max(alpha_max, a);
  double curvature = 0.0;
  for (const auto& p : potentials) curvature = std::max(curvature, p.curvature_bound());
  const double row = beta.size() == 0 ? 0.0 : beta.rowwise().sum().maxCoeff();
  return dt * (4.0 * alpha_max + 2.0 * row + curvature);
}

double disagreement(const std::vector<SequenceField>& heads) {
  double v = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    for (std::size_t j = i + 1; j < heads.size(); ++j) {
      v += (heads[i].values() - heads[j].values()).squaredNorm();
    }
  }
  return v;  // each unordered pair once == 1/2 of the ordered sum
}

bool coupling_graph_connected(const Eigen::MatrixXd& beta) {
  const Eigen::Index n = beta.rows();
  if (n <= 1) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)] && (beta(i, j) > 0.0 || beta(j, i) > 0.0)) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

SyncTrace simulate_coupled_heads(const CoupledSystemConfig& config, const std::vector<SequenceField>& initial,
                                 FlowOptions options) {
  const Eigen::Index heads = config.heads();
  if (heads < 1) throw InvalidArgument("coupled system needs at least one head");
  if (static_cast<Eigen::Index>(initial.size()) != heads || config.beta.rows() != heads ||
      config.beta.cols() != heads || static_cast<Eigen::Index>(config.potentials.size()) != heads) {
    throw DimensionMismatch("coupled system: alpha, beta, potentials and initial fields disagree on H");
  }
  for (const auto& f : initial) {
    if (f.length() != initial.front().length() || f.channels() != initial.front().channels()) {
      throw DimensionMismatch("coupled system: all heads must share one field shape");
    }
  }
  if (config.beta != config.beta.transpose() || (config.beta.array() < 0.0).any() ||
      config.beta.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidArgument("coupled system: beta must be symmetric, nonnegative, zero-diagonal");
  }
  if (!(config.dt > 0.0) || config.steps < 1) throw InvalidArgument("coupled system needs dt > 0 and steps >= 1");
  if (!options.allow_unstable && config.stability_number() >= 2.0) {
    throw StabilityBudgetExceeded("coupled system: dt budget " + std::to_string(config.stability_number()) +
                                  " must stay below 2");
  }

  SyncTrace trace;
  trace.dt = config.dt;
  std::vector<SequenceField> u = initial;
  trace.disagreement.push_back(disagreement(u));
  const StencilSpec neumann{1, BoundaryMode::NeumannReflect};
  Eigen::MatrixXd lap;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<Eigen::MatrixXd> rates;
    rates.reserve(static_cast<std::size_t>(heads));
    for (Eigen::Index i = 0; i < heads; ++i) {
      const auto& ui = u[static_cast<std::size_t>(i)];
      Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(ui.length(), ui.channels());
      const double a = config.alpha[static_cast<std::size_t>(i)];
      if (a != 0.0) {
        laplacian_into(ui.values(), neumann, lap);
        rate += a * lap;
      }
      for (Eigen::Index j = 0; j < heads; ++j) {
        const double b = config.beta(i, j);
        if (j != i && b != 0.0) rate += b * (u[static_cast<std::size_t>(j)].values() - ui.values());
      }
      const auto& pot = config.potentials[static_cast<std::size_t>(i)];
      if (pot.kind != ReactionPotential::Kind::None) {
        for (Eigen::Index c = 0; c < ui.channels(); ++c) {
          for (Eigen::Index x = 0; x < ui.length(); ++x) rate(x, c) -= pot.derivative(ui(x, c), pot.anchor_at(x, c));
        }
      }
      rates.push_back(std::move(rate));
    }
    for (Eigen::Index i = 0; i < heads; ++i) {
      u[static_cast<std::size_t>(i)].values() += config.dt * rates[static_cast<std::size_t>(i)];
    }
    trace.disagreement.push_back(disagreement(u));
  }
  trace.final_state = std::move(u);
  return trace;
}

}  // namespace pdelab
