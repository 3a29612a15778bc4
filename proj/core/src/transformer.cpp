#include "pdelab/transformer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pdelab/errors.hpp"
#include "pdelab/layer_norm.hpp"

namespace pdelab {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using P = IntegrationPosition;

constexpr std::array<std::pair<P, const char*>, 8> kPositionNames{{
    {P::None, "none"},
    {P::AfterEmbedding, "after-embedding"},
    {P::AfterMlp, "after-mlp"},
    {P::LayerDiffusion, "layer-diffusion"},
    {P::BeforeLayerNorm, "before-layernorm"},
    {P::InAttention, "in-attention"},
    {P::HeadDiffusion, "head-diffusion"},
    {P::AfterAttention, "after-attention"},
}};

// Tensor layout.
constexpr std::size_t kTok = 0;
constexpr std::size_t kPosEmb = 1;
constexpr std::size_t kPerLayer = 16;
enum LayerSlot : std::size_t { Ln1G, Ln1B, Wq, Bq, Wk, Bk, Wv, Bv, Wo, Bo, Ln2G, Ln2B, W1, B1, W2, B2 };
enum FinalSlot : std::size_t { LnfG, LnfB, Wc, Bc };

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double inner = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(inner);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  MatrixXd y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) return MatrixXd();
  std::bernoulli_distribution keep(1.0 - p);
  MatrixXd m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(*rng) ? scale : 0.0;
  return m;
}

void apply_mask(MatrixXd& x, const MatrixXd& mask) {
  if (mask.size() > 0) x.array() *= mask.array();
}

}  // namespace

const char* to_string(IntegrationPosition position) {
  for (const auto& [p, name] : kPositionNames)
    if (p == position) return name;
  return "?";
}

IntegrationPosition position_from_string(const std::string& name) {
  for (const auto& [p, n] : kPositionNames)
    if (name == n) return p;
  throw InvalidArgument("unknown integration position '" + name + "'");
}

std::vector<IntegrationPosition> all_positions() {
  std::vector<IntegrationPosition> out;
  for (const auto& entry : kPositionNames) out.push_back(entry.first);
  return out;
}

int ModelConfig::pde_channels() const {
  if (position == P::None) return 0;
  if (position == P::HeadDiffusion) return head_dim();
  return dim;
}

void ModelConfig::validate() const {
  if (dim < 1 || layers < 1 || heads < 1 || mlp_hidden < 1 || vocab < 1 || max_len < 1 || num_classes < 1)
    throw InvalidArgument("model dimensions must be positive");
  if (dim % heads != 0) throw InvalidArgument("heads (" + std::to_string(heads) + ") must divide dim (" + std::to_string(dim) + ")");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidArgument("dropout must lie in [0, 1)");
  if (position != P::None) {
    if (pde.scales.empty()) throw InvalidArgument("diffusion position needs at least one scale");
    const int hmax = *std::max_element(pde.scales.begin(), pde.scales.end());
    if (position != P::HeadDiffusion && hmax >= max_len)
      throw InvalidStencil("largest diffusion scale " + std::to_string(hmax) + " must be below max_len " + std::to_string(max_len));
  }
}

struct BlockCache {
  MatrixXd x_in;
  LayerCache pre1;
  LayerNormCache ln1;
  MatrixXd n1, q, k, v_raw, v;
  LayerCache pde_v;
  std::vector<MatrixXd> probs;
  MatrixXd ctx_raw, ctx;
  std::vector<LayerCache> pde_heads;
  LayerCache pde_attn;
  MatrixXd attn_mask;
  MatrixXd x1;
  LayerCache pre2;
  LayerNormCache ln2;
  MatrixXd n2, hpre, hact;
  LayerCache pde_mlp;
  MatrixXd mlp_mask;
  LayerCache between;
};

struct SampleCache {
  std::vector<int> tokens;
  Eigen::Index n_valid = 0;
  Eigen::Array<bool, Eigen::Dynamic, 1> valid;
  LayerCache pde_emb;
  std::vector<BlockCache> blocks;
  LayerNormCache lnf;
  RowVectorXd pooled;
  VectorXd probs;
};

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random = [&](Eigen::Index r, Eigen::Index cols, double stdev) {
    MatrixXd m(r, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = stdev * normal(rng);
    return m;
  };
  auto add = [&](std::string name, MatrixXd m) {
    names_.push_back(std::move(name));
    params_.push_back(std::move(m));
  };
  const double emb_std = 0.1;
  add("tok_emb", random(c.vocab, c.dim, emb_std));
  add("pos_emb", random(c.max_len, c.dim, emb_std));
  const double in_std = 1.0 / std::sqrt(static_cast<double>(c.dim));
  const double hid_std = 1.0 / std::sqrt(static_cast<double>(c.mlp_hidden));
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    add(p + "ln1.gamma", MatrixXd::Ones(1, c.dim));
    add(p + "ln1.beta", MatrixXd::Zero(1, c.dim));
    add(p + "wq", random(c.dim, c.dim, in_std));
    add(p + "bq", MatrixXd::Zero(1, c.dim));
    add(p + "wk", random(c.dim, c.dim, in_std));
    add(p + "bk", MatrixXd::Zero(1, c.dim));
    add(p + "wv", random(c.dim, c.dim, in_std));
    add(p + "bv", MatrixXd::Zero(1, c.dim));
    add(p + "wo", random(c.dim, c.dim, in_std));
    add(p + "bo", MatrixXd::Zero(1, c.dim));
    add(p + "ln2.gamma", MatrixXd::Ones(1, c.dim));
    add(p + "ln2.beta", MatrixXd::Zero(1, c.dim));
    add(p + "w1", random(c.dim, c.mlp_hidden, in_std));
    add(p + "b1", MatrixXd::Zero(1, c.mlp_hidden));
    add(p + "w2", random(c.mlp_hidden, c.dim, hid_std));
    add(p + "b2", MatrixXd::Zero(1, c.dim));
  }
  add("lnf.gamma", MatrixXd::Ones(1, c.dim));
  add("lnf.beta", MatrixXd::Zero(1, c.dim));
  add("classifier.w", random(c.dim, c.num_classes, in_std));
  add("classifier.b", MatrixXd::Zero(1, c.num_classes));

  if (has_pde()) {
    const Eigen::Index channels = c.pde_channels();
    DiffusionLayerParams pde = c.pde;
    const Eigen::Index want_cols = pde.tied ? 1 : channels;
    const auto k = static_cast<Eigen::Index>(pde.scales.size());
    if (pde.raw_alpha.rows() != k || pde.raw_alpha.cols() != want_cols || pde.mix_weights.size() != k) {
      auto fresh = DiffusionLayerParams::make(channels, pde.scales, pde.alpha_bound * 0.2, pde.tied);
      fresh.alpha_bound = pde.alpha_bound;
      fresh.set_uniform_alpha(c.pde_alpha_init);
      pde.raw_alpha = fresh.raw_alpha;
      pde.mix_weights = fresh.mix_weights;
    }
    pde.validate();
    config_.pde = pde;
    add("pde.raw_alpha", pde.raw_alpha);
    add("pde.mix_weights", MatrixXd(pde.mix_weights));
  }
}

Eigen::Index Model::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Eigen::Index Model::pde_parameter_count() const {
  if (!has_pde()) return 0;
  return params_[params_.size() - 2].size() + params_.back().size();
}

DiffusionLayerParams Model::pde_params() const {
  DiffusionLayerParams p = config_.pde;
  if (has_pde()) {
    p.raw_alpha = params_[params_.size() - 2];
    p.mix_weights = params_.back().col(0);
  }
  return p;
}

void Model::set_pde_params(const DiffusionLayerParams& params) {
  if (!has_pde()) throw InvalidArgument("model has no diffusion layer");
  if (params.raw_alpha.rows() != params_[params_.size() - 2].rows() ||
      params.raw_alpha.cols() != params_[params_.size() - 2].cols() ||
      params.mix_weights.size() != params_.back().rows())
    throw DimensionMismatch("diffusion parameter shape does not match the model");
  params_[params_.size() - 2] = params.raw_alpha;
  params_.back() = params.mix_weights;
}

Eigen::Index Model::run_length(std::span<const int> tokens) const {
  std::ptrdiff_t n = std::ssize(tokens);
  while (n > 0 && tokens[static_cast<std::size_t>(n - 1)] == listops::kPad) --n;
  Eigen::Index len = std::max<Eigen::Index>(n, 1);
  const auto pos = config_.position;
  if (pos != P::None && pos != P::HeadDiffusion) {
    const int hmax = *std::max_element(config_.pde.scales.begin(), config_.pde.scales.end());
    len = std::max<Eigen::Index>(len, hmax + 1);
  }
  return std::min<Eigen::Index>(len, config_.max_len);
}

double Model::forward_sample(std::span<const int> tokens, double dropout, std::mt19937_64* rng,
                             SampleCache* cache, VectorXd* logits_out) const {
  const auto& c = config_;
  if (tokens.empty() || static_cast<int>(tokens.size()) > c.max_len)
    throw InvalidArgument("sequence length " + std::to_string(tokens.size()) + " outside [1, max_len]");
  const Eigen::Index len = run_length(tokens);

  SampleCache local;
  SampleCache& s = cache ? *cache : local;
  s.tokens.assign(static_cast<std::size_t>(len), listops::kPad);
  std::copy(tokens.begin(), tokens.begin() + std::min<std::ptrdiff_t>(len, std::ssize(tokens)), s.tokens.begin());
  s.valid.resize(len);
  s.n_valid = 0;
  for (Eigen::Index i = 0; i < len; ++i) {
    s.valid(i) = s.tokens[static_cast<std::size_t>(i)] != listops::kPad;
    s.n_valid += s.valid(i) ? 1 : 0;
  }
  if (s.n_valid == 0) throw InvalidArgument("sequence has no non-padding token");

  const DiffusionLayerParams pde = pde_params();
  const auto pos = c.position;
  const ForwardOptions head_opts{std::max(1, c.heads - 1)};

  MatrixXd x(len, c.dim);
  for (Eigen::Index i = 0; i < len; ++i) {
    const int t = s.tokens[static_cast<std::size_t>(i)];
    if (t < 0 || t >= c.vocab) throw InvalidArgument("token " + std::to_string(t) + " outside vocabulary");
    x.row(i) = params_[kTok].row(t) + params_[kPosEmb].row(i);
  }
  if (pos == P::AfterEmbedding) x = forward(x, pde, s.pde_emb);

  const Eigen::Index dh = c.head_dim();
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  s.blocks.resize(static_cast<std::size_t>(c.layers));
  for (int l = 0; l < c.layers; ++l) {
    const auto* w = &params_[2 + kPerLayer * static_cast<std::size_t>(l)];
    BlockCache& b = s.blocks[static_cast<std::size_t>(l)];
    b.x_in = x;

    MatrixXd z1 = pos == P::BeforeLayerNorm ? forward(x, pde, b.pre1) : x;
    b.n1 = layer_norm_forward(z1, b.ln1);
    b.n1 = (b.n1.array().rowwise() * w[Ln1G].row(0).array()).matrix();
    b.n1.rowwise() += w[Ln1B].row(0);

    b.q = affine(b.n1, w[Wq], w[Bq]);
    b.k = affine(b.n1, w[Wk], w[Bk]);
    b.v_raw = affine(b.n1, w[Wv], w[Bv]);
    b.v = pos == P::InAttention ? forward(b.v_raw, pde, b.pde_v) : b.v_raw;

    b.probs.resize(static_cast<std::size_t>(c.heads));
    b.ctx_raw.resize(len, c.dim);
    for (int h = 0; h < c.heads; ++h) {
      MatrixXd scores = b.q.middleCols(h * dh, dh) * b.k.middleCols(h * dh, dh).transpose() * att_scale;
      for (Eigen::Index j = 0; j < len; ++j)
        if (!s.valid(j)) scores.col(j).setConstant(-std::numeric_limits<double>::infinity());
      VectorXd row_max = scores.rowwise().maxCoeff();
      MatrixXd e = (scores.colwise() - row_max).array().exp().matrix();
      VectorXd denom = e.rowwise().sum();
      b.probs[static_cast<std::size_t>(h)] = e.array().colwise() / denom.array();
      b.ctx_raw.middleCols(h * dh, dh) = b.probs[static_cast<std::size_t>(h)] * b.v.middleCols(h * dh, dh);
    }
    if (pos == P::HeadDiffusion) {
      b.ctx.resize(len, c.dim);
      b.pde_heads.resize(static_cast<std::size_t>(len));
      for (Eigen::Index i = 0; i < len; ++i) {
        // Row i as a heads x head_dim lattice.
        MatrixXd lattice = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            b.ctx_raw.row(i).eval().data(), c.heads, dh);
        MatrixXd out = forward(lattice, pde, b.pde_heads[static_cast<std::size_t>(i)], head_opts);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = out;
        b.ctx.row(i) = Eigen::Map<const RowVectorXd>(rm.data(), c.dim);
      }
    } else {
      b.ctx = b.ctx_raw;
    }

    MatrixXd attn = affine(b.ctx, w[Wo], w[Bo]);
    if (pos == P::AfterAttention) attn = forward(attn, pde, b.pde_attn);
    b.attn_mask = dropout_mask(len, c.dim, dropout, rng);
    apply_mask(attn, b.attn_mask);
    b.x1 = x + attn;

    MatrixXd z2 = pos == P::BeforeLayerNorm ? forward(b.x1, pde, b.pre2) : b.x1;
    b.n2 = layer_norm_forward(z2, b.ln2);
    b.n2 = (b.n2.array().rowwise() * w[Ln2G].row(0).array()).matrix();
    b.n2.rowwise() += w[Ln2B].row(0);
    b.hpre = affine(b.n2, w[W1], w[B1]);
    b.hact = b.hpre.unaryExpr([](double v) { return gelu(v); });
    MatrixXd m = affine(b.hact, w[W2], w[B2]);
    if (pos == P::AfterMlp) m = forward(m, pde, b.pde_mlp);
    b.mlp_mask = dropout_mask(len, c.dim, dropout, rng);
    apply_mask(m, b.mlp_mask);
    x = b.x1 + m;

    if (pos == P::LayerDiffusion && l + 1 < c.layers) x = forward(x, pde, b.between);
  }

  const std::size_t fin = 2 + kPerLayer * static_cast<std::size_t>(c.layers);
  MatrixXd nf = layer_norm_forward(x, s.lnf);
  nf = (nf.array().rowwise() * params_[fin + LnfG].row(0).array()).matrix();
  nf.rowwise() += params_[fin + LnfB].row(0);
  s.pooled = RowVectorXd::Zero(c.dim);
  for (Eigen::Index i = 0; i < len; ++i)
    if (s.valid(i)) s.pooled += nf.row(i);
  s.pooled /= static_cast<double>(s.n_valid);
  VectorXd logits = (s.pooled * params_[fin + Wc] + params_[fin + Bc]).transpose();
  if (logits_out) *logits_out = logits;
  const double mx = logits.maxCoeff();
  s.probs = (logits.array() - mx).exp().matrix();
  s.probs /= s.probs.sum();
  return 0.0;
}

void Model::backward_sample(const SampleCache& s, const VectorXd& grad_logits, ParameterList& g) const {
  const auto& c = config_;
  const auto len = static_cast<Eigen::Index>(s.tokens.size());
  const auto pos = c.position;
  const std::size_t fin = 2 + kPerLayer * static_cast<std::size_t>(c.layers);
  const std::size_t raw_idx = params_.size() - 2;
  const std::size_t mix_idx = params_.size() - 1;
  auto pde_back = [&](const LayerCache& cache, const MatrixXd& grad) {
    LayerGradients lg = backward(cache, grad);
    g[raw_idx] += lg.grad_raw_alpha;
    g[mix_idx] += lg.grad_mix_weights;
    return lg.grad_in;
  };

  // Classifier and pooling.
  const RowVectorXd gl = grad_logits.transpose();
  g[fin + Wc] += s.pooled.transpose() * gl;
  g[fin + Bc] += gl;
  const RowVectorXd dpooled = gl * params_[fin + Wc].transpose() / static_cast<double>(s.n_valid);
  MatrixXd dnf = MatrixXd::Zero(len, c.dim);
  for (Eigen::Index i = 0; i < len; ++i)
    if (s.valid(i)) dnf.row(i) = dpooled;
  g[fin + LnfG] += (dnf.array() * s.lnf.normalized.array()).colwise().sum().matrix();
  g[fin + LnfB] += dnf.colwise().sum();
  MatrixXd dx = layer_norm_backward(s.lnf, (dnf.array().rowwise() * params_[fin + LnfG].row(0).array()).matrix());

  const Eigen::Index dh = c.head_dim();
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = c.layers - 1; l >= 0; --l) {
    const std::size_t base = 2 + kPerLayer * static_cast<std::size_t>(l);
    const auto* w = &params_[base];
    auto* gw = &g[base];
    const BlockCache& b = s.blocks[static_cast<std::size_t>(l)];

    if (pos == P::LayerDiffusion && l + 1 < c.layers) dx = pde_back(b.between, dx);

    // MLP sub-layer.
    MatrixXd dx1 = dx;
    MatrixXd dm = dx;
    apply_mask(dm, b.mlp_mask);
    if (pos == P::AfterMlp) dm = pde_back(b.pde_mlp, dm);
    gw[W2] += b.hact.transpose() * dm;
    gw[B2] += dm.colwise().sum();
    MatrixXd dh_pre = (dm * w[W2].transpose()).array() * b.hpre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    gw[W1] += b.n2.transpose() * dh_pre;
    gw[B1] += dh_pre.colwise().sum();
    MatrixXd dn2 = dh_pre * w[W1].transpose();
    gw[Ln2G] += (dn2.array() * b.ln2.normalized.array()).colwise().sum().matrix();
    gw[Ln2B] += dn2.colwise().sum();
    MatrixXd dz2 = layer_norm_backward(b.ln2, (dn2.array().rowwise() * w[Ln2G].row(0).array()).matrix());
    dx1 += pos == P::BeforeLayerNorm ? pde_back(b.pre2, dz2) : dz2;

    // Attention sub-layer.
    MatrixXd dxin = dx1;
    MatrixXd da = dx1;
    apply_mask(da, b.attn_mask);
    if (pos == P::AfterAttention) da = pde_back(b.pde_attn, da);
    gw[Wo] += b.ctx.transpose() * da;
    gw[Bo] += da.colwise().sum();
    MatrixXd dctx = da * w[Wo].transpose();
    if (pos == P::HeadDiffusion) {
      MatrixXd raw(len, c.dim);
      for (Eigen::Index i = 0; i < len; ++i) {
        MatrixXd lattice_grad = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            dctx.row(i).eval().data(), c.heads, dh);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
            pde_back(b.pde_heads[static_cast<std::size_t>(i)], lattice_grad);
        raw.row(i) = Eigen::Map<const RowVectorXd>(rm.data(), c.dim);
      }
      dctx = std::move(raw);
    }
    MatrixXd dq(len, c.dim), dk(len, c.dim), dv(len, c.dim);
    for (int h = 0; h < c.heads; ++h) {
      const MatrixXd& p = b.probs[static_cast<std::size_t>(h)];
      const auto dctx_h = dctx.middleCols(h * dh, dh);
      MatrixXd dp = dctx_h * b.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = p.transpose() * dctx_h;
      VectorXd rowdot = (dp.array() * p.array()).rowwise().sum();
      MatrixXd ds = (p.array() * (dp.colwise() - rowdot).array()).matrix() * att_scale;
      dq.middleCols(h * dh, dh) = ds * b.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * b.q.middleCols(h * dh, dh);
    }
    if (pos == P::InAttention) dv = pde_back(b.pde_v, dv);
    gw[Wq] += b.n1.transpose() * dq;
    gw[Bq] += dq.colwise().sum();
    gw[Wk] += b.n1.transpose() * dk;
    gw[Bk] += dk.colwise().sum();
    gw[Wv] += b.n1.transpose() * dv;
    gw[Bv] += dv.colwise().sum();
    MatrixXd dn1 = dq * w[Wq].transpose() + dk * w[Wk].transpose() + dv * w[Wv].transpose();
    gw[Ln1G] += (dn1.array() * b.ln1.normalized.array()).colwise().sum().matrix();
    gw[Ln1B] += dn1.colwise().sum();
    MatrixXd dz1 = layer_norm_backward(b.ln1, (dn1.array().rowwise() * w[Ln1G].row(0).array()).matrix());
    dxin += pos == P::BeforeLayerNorm ? pde_back(b.pre1, dz1) : dz1;
    dx = std::move(dxin);
  }

  if (pos == P::AfterEmbedding) dx = pde_back(s.pde_emb, dx);
  for (Eigen::Index i = 0; i < len; ++i) {
    g[kTok].row(s.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    g[kPosEmb].row(i) += dx.row(i);
  }
}

VectorXd Model::logits(std::span<const int> tokens) const {
  VectorXd out;
  forward_sample(tokens, 0.0, nullptr, nullptr, &out);
  return out;
}

MatrixXd Model::logits(std::span<const Example> batch) const {
  MatrixXd out(static_cast<Eigen::Index>(batch.size()), config_.num_classes);
  for (std::size_t i = 0; i < batch.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = logits(batch[i].tokens).transpose();
  return out;
}

int Model::predict(std::span<const int> tokens) const {
  VectorXd l = logits(tokens);
  Eigen::Index arg = 0;
  l.maxCoeff(&arg);
  return static_cast<int>(arg);
}

double Model::accuracy(std::span<const Example> examples) const {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) hits += predict(ex.tokens) == ex.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

ParameterList Model::zero_gradients() const {
  ParameterList out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  return out;
}

double Model::accumulate_gradients(std::span<const Example> batch, double dropout, std::mt19937_64& rng,
                                   ParameterList& grads) const {
  if (grads.size() != params_.size()) throw DimensionMismatch("gradient list does not match the model");
  double loss = 0.0;
  SampleCache cache;
  VectorXd logits_out;
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= config_.num_classes) throw InvalidArgument("label out of range");
    forward_sample(ex.tokens, dropout, &rng, &cache, &logits_out);
    const double p = cache.probs(ex.label);
    loss += -std::log(std::max(p, std::numeric_limits<double>::min()));
    if (!std::isfinite(logits_out.sum())) loss = std::numeric_limits<double>::quiet_NaN();
    VectorXd grad = cache.probs;
    grad(ex.label) -= 1.0;
    backward_sample(cache, grad, grads);
  }
  return loss;
}

Model build_model(const ModelConfig& config) { return Model(config); }

}  // namespace pdelab
