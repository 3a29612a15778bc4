#include "pdelab/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pdelab/errors.hpp"

namespace pdelab {

SequenceField::SequenceField(Eigen::Index length, Eigen::Index channels)
    : values_(Eigen::MatrixXd::Zero(length, channels)) {
  if (length < 1 || channels < 1) {
    throw InvalidArgument("SequenceField needs at least one position and one channel");
  }
}

SequenceField::SequenceField(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw InvalidArgument("SequenceField needs at least one position and one channel");
  }
}

SequenceField SequenceField::zeros(Eigen::Index length, Eigen::Index channels) {
  return SequenceField(length, channels);
}

SequenceField SequenceField::constant(Eigen::Index length, Eigen::Index channels, double value) {
  SequenceField f(length, channels);
  f.values_.setConstant(value);
  return f;
}

SequenceField SequenceField::column(std::span<const double> values) {
  SequenceField f(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) f.values_(static_cast<Eigen::Index>(i), 0) = values[i];
  return f;
}

Eigen::VectorXd SequenceField::channel_means() const { return values_.colwise().mean().transpose(); }

const char* to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::NeumannReflect:
      return "neumann-reflect";
    case BoundaryMode::ReplicateClamp:
      return "replicate-clamp";
  }
  return "unknown";
}

BoundaryMode boundary_from_string(const std::string& name) {
  if (name == "neumann-reflect") return BoundaryMode::NeumannReflect;
  if (name == "replicate-clamp") return BoundaryMode::ReplicateClamp;
  throw InvalidArgument("unknown boundary mode '" + name + "'");
}

Eigen::Index neighbor_index(Eigen::Index i, int offset, Eigen::Index length, BoundaryMode mode) {
  const Eigen::Index j = i + offset;
  if (j >= 0 && j < length) return j;
  if (mode == BoundaryMode::ReplicateClamp) return i;
  return j < 0 ? -1 - j : 2 * length - 1 - j;
}

namespace {

void check_stencil(Eigen::Index length, const StencilSpec& stencil) {
  if (stencil.scale < 1) throw InvalidStencil("stencil scale must be >= 1");
  if (length > 1 && stencil.scale >= length) {
    throw InvalidStencil("stencil scale " + std::to_string(stencil.scale) +
                         " must be smaller than the field length " + std::to_string(length));
  }
}

}  // namespace

void laplacian_into(const Eigen::MatrixXd& in, const StencilSpec& stencil, Eigen::MatrixXd& out) {
  const Eigen::Index n = in.rows();
  check_stencil(n, stencil);
  out.resize(n, in.cols());
  if (n == 1) {
    out.setZero();
    return;
  }
  const int h = stencil.scale;
  const Eigen::Index lo = std::min<Eigen::Index>(h, n);
  const Eigen::Index hi = std::max<Eigen::Index>(n - h, lo);
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    const double* x = in.col(c).data();
    double* y = out.col(c).data();
    for (Eigen::Index i = lo; i < hi; ++i) y[i] = x[i - h] - 2.0 * x[i] + x[i + h];
    for (Eigen::Index i = 0; i < lo; ++i) {
      y[i] = x[neighbor_index(i, -h, n, stencil.boundary)] - 2.0 * x[i] +
             x[neighbor_index(i, h, n, stencil.boundary)];
    }
    for (Eigen::Index i = hi; i < n; ++i) {
      y[i] = x[neighbor_index(i, -h, n, stencil.boundary)] - 2.0 * x[i] +
             x[neighbor_index(i, h, n, stencil.boundary)];
    }
  }
}

SequenceField laplacian(const SequenceField& field, const StencilSpec& stencil) {
  if (!field.all_finite()) throw InvalidArgument("laplacian: field contains non-finite values");
  Eigen::MatrixXd out;
  laplacian_into(field.values(), stencil, out);
  return SequenceField(std::move(out));
}

Eigen::MatrixXd laplacian_matrix(Eigen::Index length, const StencilSpec& stencil) {
  if (length < 1) throw InvalidArgument("laplacian_matrix needs length >= 1");
  check_stencil(length, stencil);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(length, length);
  if (length == 1) return m;
  for (Eigen::Index i = 0; i < length; ++i) {
    m(i, neighbor_index(i, -stencil.scale, length, stencil.boundary)) += 1.0;
    m(i, neighbor_index(i, stencil.scale, length, stencil.boundary)) += 1.0;
    m(i, i) -= 2.0;
  }
  return m;
}

SequenceField diffusion_step(const SequenceField& field, std::span<const double> alpha,
                             const StencilSpec& stencil, StepOptions options) {
  if (static_cast<Eigen::Index>(alpha.size()) != field.channels()) {
    throw DimensionMismatch("diffusion_step: expected " + std::to_string(field.channels()) +
                            " coefficients, got " + std::to_string(alpha.size()));
  }
  for (double a : alpha) {
    if (!options.allow_unstable && !(a > 0.0 && a < 0.5)) {
      throw CflViolation("diffusion coefficient " + std::to_string(a) +
                         " outside the stable interval (0, 0.5)");
    }
  }
  if (!field.all_finite()) throw InvalidArgument("diffusion_step: field contains non-finite values");
  Eigen::MatrixXd lap;
  laplacian_into(field.values(), stencil, lap);
  Eigen::MatrixXd out = field.values();
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) += alpha[c] * lap.col(c);
  return SequenceField(std::move(out));
}

SequenceField diffusion_step(const SequenceField& field, double alpha, const StencilSpec& stencil,
                             StepOptions options) {
  std::vector<double> per_channel(static_cast<std::size_t>(field.channels()), alpha);
  return diffusion_step(field, per_channel, stencil, options);
}

double dirichlet_energy(const SequenceField& field) {
  const auto& x = field.values();
  const Eigen::Index n = x.rows();
  if (n < 2) return 0.0;
  return (x.bottomRows(n - 1) - x.topRows(n - 1)).squaredNorm();
}

}  // namespace pdelab
