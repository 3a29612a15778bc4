#include "pdelab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "pdelab/complexity.hpp"
#include "pdelab/csv.hpp"
#include "pdelab/diffusion_layer.hpp"
#include "pdelab/dynamics.hpp"
#include "pdelab/errors.hpp"
#include "pdelab/parallel.hpp"
#include "pdelab/positions.hpp"
#include "pdelab/retention.hpp"
#include "pdelab/spectral.hpp"
#include "pdelab/training.hpp"

namespace pdelab {

namespace {

struct Outcome {
  CsvTable table;
  std::vector<std::string> summary;
  bool ok = true;

  void note(const std::string& line) { summary.push_back(line); }
  void check(bool pass, const std::string& what) {
    summary.push_back(std::string(pass ? "pass: " : "FAIL: ") + what);
    ok = ok && pass;
  }
};

std::string fmt(double v) { return format_number(v); }

Eigen::MatrixXd random_values(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

int positive(const ExperimentConfig& c, const std::string& key) {
  const long v = c.get_int(key);
  if (v < 1) throw ConfigError("key '" + key + "' must be >= 1");
  return static_cast<int>(v);
}

Outcome cmd_spectrum(const ExperimentConfig& c) {
  const int n = positive(c, "L");
  Outcome o;
  o.table.columns = {"k", "closed_form", "dense_oracle", "abs_diff", "residual"};
  const Eigen::MatrixXd lap = laplacian_matrix(n, StencilSpec{1});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  Eigen::VectorXd dense = solver.eigenvalues();
  std::sort(dense.data(), dense.data() + dense.size(), std::greater<>());
  const auto profile = spectral_profile(n);
  double worst = 0.0, worst_res = 0.0;
  for (int k = 0; k < n; ++k) {
    const double lam = profile.eigenvalues(k);
    const double diff = std::abs(lam - dense(k));
    const double res = (lap * profile.basis.col(k) - lam * profile.basis.col(k)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    worst_res = std::max(worst_res, res);
    o.table.add({static_cast<long>(k), lam, dense(k), diff, res});
  }
  o.check(worst < 1e-10, "max |closed form - dense| = " + fmt(worst) + " < 1e-10");
  o.check(worst_res < 1e-8, "max eigenbasis residual = " + fmt(worst_res) + " < 1e-8");
  return o;
}

Outcome cmd_stability(const ExperimentConfig& c) {
  const int n = positive(c, "L");
  const int d = positive(c, "d");
  const int fields = positive(c, "fields");
  const int steps = positive(c, "steps");
  const double alpha = c.get_double("alpha");
  const double alpha_bad = c.get_double("alpha_unstable");
  const int bad_steps = positive(c, "unstable_steps");
  const StencilSpec stencil{positive(c, "scale"), boundary_from_string(c.get("boundary"))};
  std::mt19937_64 rng(c.get_u64("seed"));
  Outcome o;
  o.table.columns = {"case", "index", "alpha", "steps", "max_rel_increase", "energy_ratio"};
  long increases = 0;
  for (int f = 0; f < fields; ++f) {
    SequenceField u(random_values(rng, n, d));
    const double e0 = dirichlet_energy(u);
    double prev = e0, worst = 0.0;
    for (int s = 0; s < steps; ++s) {
      u = diffusion_step(u, alpha, stencil);
      const double e = dirichlet_energy(u);
      const double rel = prev > 0.0 ? (e - prev) / prev : e - prev;
      worst = std::max(worst, rel);
      if (rel > 1e-10) ++increases;
      prev = e;
    }
    o.table.add({std::string("random"), static_cast<long>(f), alpha, static_cast<long>(steps), worst, e0 > 0 ? prev / e0 : 0.0});
  }
  o.check(increases == 0, std::to_string(increases) + " energy increases beyond 1e-10 relative at alpha=" + fmt(alpha));

  const Eigen::MatrixXd basis = dct_basis(n);
  Eigen::MatrixXd top(n, d);
  for (int j = 0; j < d; ++j) top.col(j) = basis.col(n - 1);
  SequenceField u(top);
  double prev = dirichlet_energy(u);
  const double e0 = prev;
  bool strictly = true;
  double min_growth = std::numeric_limits<double>::infinity();
  for (int s = 0; s < bad_steps; ++s) {
    u = diffusion_step(u, alpha_bad, stencil, StepOptions{true});
    const double e = dirichlet_energy(u);
    strictly = strictly && e > prev;
    min_growth = std::min(min_growth, e / prev);
    prev = e;
  }
  o.table.add({std::string("highest-mode"), static_cast<long>(n - 1), alpha_bad, static_cast<long>(bad_steps),
               min_growth - 1.0, prev / e0});
  o.check(strictly, "highest cosine mode energy strictly increases at alpha=" + fmt(alpha_bad) +
                        " (ratio after " + std::to_string(bad_steps) + " steps " + fmt(prev / e0) + ")");
  return o;
}

Outcome cmd_heatkernel(const ExperimentConfig& c) {
  const int n = positive(c, "L");
  Outcome o;
  o.table.columns = {"t", "max_row_sum_err", "min_entry", "semigroup_err"};
  double worst_row = 0.0, worst_semi = 0.0, min_entry = 0.0;
  for (double t : c.get_double_list("t")) {
    if (!(t > 0.0)) throw ConfigError("key 't': times must be positive");
    const Eigen::MatrixXd k = heat_kernel(n, t);
    const double row = (k.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double semi = (heat_kernel(n, 2 * t) - k * k).cwiseAbs().maxCoeff();
    worst_row = std::max(worst_row, row);
    worst_semi = std::max(worst_semi, semi);
    min_entry = std::min(min_entry, k.minCoeff());
    o.table.add({t, row, k.minCoeff(), semi});
  }
  o.check(worst_row < 1e-8, "row sums within " + fmt(worst_row) + " of 1");
  o.check(min_entry >= -1e-10, "smallest entry " + fmt(min_entry) + " >= -1e-10");
  o.check(worst_semi < 1e-8, "K_2t - K_t K_t max abs " + fmt(worst_semi));

  const int gn = positive(c, "gaussian_L");
  const double gt = c.get_double("gaussian_t");
  const Eigen::MatrixXd k = heat_kernel(gn, gt);
  const int x = gn / 2;
  const int reach = std::min(x - 1, static_cast<int>(3.0 * std::sqrt(2.0 * gt)));
  std::vector<double> r2, logk;
  for (int r = 1; r <= reach; ++r) {
    r2.push_back(static_cast<double>(r) * r);
    logk.push_back(std::log(k(x, x + r)));
  }
  if (r2.size() < 2) throw ConfigError("gaussian_L too small for the envelope fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(r2.size());
  for (std::size_t i = 0; i < r2.size(); ++i) {
    sx += r2[i];
    sy += logk[i];
    sxx += r2[i] * r2[i];
    sxy += r2[i] * logk[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double expected = -1.0 / (4.0 * gt);
  o.check(std::abs(slope - expected) <= 0.25 * std::abs(expected),
          "log K vs r^2 slope " + fmt(slope) + " within 25% of " + fmt(expected));
  return o;
}

Outcome cmd_fitscales(const ExperimentConfig& c) {
  const int max_scale = positive(c, "max_scale");
  const double omega_max = c.get_double("omega_max");
  const int grid = positive(c, "grid");
  Outcome o;
  o.table.columns = {"K", "scales", "rms_error", "weights"};
  std::vector<int> scales;
  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  for (int h = 1; h <= max_scale; h *= 2) {
    scales.push_back(h);
    const auto fit = fit_multiscale_weights(scales, omega_max, grid);
    std::string s, w;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      s += (i ? "|" : "") + std::to_string(scales[i]);
      w += (i ? "|" : "") + fmt(fit.weights[i]);
    }
    o.table.add({static_cast<long>(scales.size()), s, fit.rms_error, w});
    decreasing = decreasing && fit.rms_error < prev;
    prev = fit.rms_error;
  }
  o.check(decreasing, "RMS error strictly decreasing along the scale ladder");
  return o;
}

Outcome cmd_flow(const ExperimentConfig& c) {
  const int n = positive(c, "L");
  const int d = positive(c, "d");
  std::mt19937_64 rng(c.get_u64("seed"));
  FlowConfig cfg;
  cfg.alpha_diff = c.get_double("alpha");
  const double mu = c.get_double("mu");
  const double lambda = c.get_double("lambda");
  const std::string pot = c.get("potential");
  SequenceField anchor(random_values(rng, n, d, 0.5));
  if (pot == "none")
    cfg.potential = ReactionPotential::none();
  else if (pot == "quadratic")
    cfg.potential = ReactionPotential::quadratic(mu);
  else if (pot == "anchored")
    cfg.potential = ReactionPotential::anchored_quadratic(mu, lambda, anchor);
  else if (pot == "double-well")
    cfg.potential = ReactionPotential::double_well_anchored(mu, lambda, anchor);
  else
    throw ConfigError("key 'potential': unknown value '" + pot + "'");
  const double beta = c.get_double("beta");
  cfg.coupling = CouplingKernel::zero(n);
  if (beta != 0.0) {
    const double w = c.get_double("kernel_width");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) cfg.coupling.weights(i, j) = std::exp(-0.5 * (i - j) * (i - j) / (w * w));
    cfg.coupling.beta = beta;
  }
  cfg.dt = c.get_double("dt");
  cfg.steps = positive(c, "steps");
  const auto result = run_flow(SequenceField(random_values(rng, n, d)), cfg);
  const auto& tr = result.trace;
  Outcome o;
  o.table.columns = {"step", "time", "energy", "grad_norm", "dirichlet"};
  long rises = 0;
  for (std::size_t s = 0; s < tr.energy.size(); ++s) {
    o.table.add({static_cast<long>(s), static_cast<double>(s) * tr.dt, tr.energy[s], tr.grad_norm[s], tr.dirichlet[s]});
    if (s > 0 && tr.energy[s] - tr.energy[s - 1] > 1e-9 * std::abs(tr.energy[s - 1])) ++rises;
  }
  o.note("stability number " + fmt(cfg.stability_number()));
  o.check(rises == 0, "energy non-increasing (" + std::to_string(rises) + " rises)");
  if (pot == "quadratic") {
    const auto fit = check_exponential_decay(tr, mu);
    o.check(fit.pass, "gradient-norm decay rate " + fmt(fit.fitted_rate) + " vs -mu = " + fmt(-mu));
  }
  return o;
}

Outcome cmd_sync(const ExperimentConfig& c) {
  const int heads = positive(c, "heads");
  const int n = positive(c, "L");
  const int d = positive(c, "d");
  const std::string topo = c.get("topology");
  if (topo != "ring" && topo != "pairs") throw ConfigError("key 'topology': expected ring or pairs");
  const double beta = c.get_double("beta");
  CoupledSystemConfig cfg;
  cfg.alpha.assign(static_cast<std::size_t>(heads), c.get_double("alpha"));
  cfg.beta = Eigen::MatrixXd::Zero(heads, heads);
  auto link = [&](int i, int j) {
    if (i != j) cfg.beta(i, j) = cfg.beta(j, i) = beta;
  };
  if (topo == "ring") {
    for (int i = 0; i < heads; ++i) link(i, (i + 1) % heads);
  } else {
    for (int i = 0; i + 1 < heads; i += 2) link(i, i + 1);
  }
  cfg.potentials.assign(static_cast<std::size_t>(heads), ReactionPotential::none());
  cfg.dt = c.get_double("dt");
  cfg.steps = positive(c, "steps");
  const double offset = c.get_double("offset");
  std::mt19937_64 rng(c.get_u64("seed"));
  std::vector<SequenceField> init;
  for (int i = 0; i < heads; ++i) {
    Eigen::MatrixXd v = random_values(rng, n, d, 0.2);
    v.array() += (i < heads / 2 ? 0.0 : offset) - v.mean();
    init.emplace_back(v);
  }
  const auto tr = simulate_coupled_heads(cfg, init);
  Outcome o;
  o.table.columns = {"step", "disagreement", "ratio"};
  const double v0 = tr.disagreement.front();
  for (std::size_t s = 0; s < tr.disagreement.size(); ++s)
    o.table.add({static_cast<long>(s), tr.disagreement[s], v0 > 0 ? tr.disagreement[s] / v0 : 0.0});
  const double ratio = v0 > 0 ? tr.disagreement.back() / v0 : 0.0;
  const bool connected = coupling_graph_connected(cfg.beta);
  o.note(std::string("coupling graph ") + (connected ? "connected" : "disconnected"));
  if (connected)
    o.check(ratio < 1e-6, "final disagreement ratio " + fmt(ratio) + " < 1e-6");
  else
    o.check(ratio > 0.1, "final disagreement ratio " + fmt(ratio) + " > 0.1 (plateau)");
  return o;
}

Outcome cmd_gradcheck(const ExperimentConfig& c) {
  const int n = positive(c, "L");
  const int d = positive(c, "d");
  const int trials = positive(c, "trials");
  const double tol = c.get_double("tol");
  const std::uint64_t seed = c.get_u64("seed");
  Outcome o;
  o.table.columns = {"case", "max_rel_err"};
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t));
    auto params = DiffusionLayerParams::make(d, c.get_int_list("scales"));
    params.post_norm = c.get_bool("post_norm");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < params.raw_alpha.size(); ++i) params.raw_alpha(i) = normal(rng) - 1.5;
    for (Eigen::Index i = 0; i < params.mix_weights.size(); ++i) params.mix_weights(i) += 0.2 * normal(rng);
    const SequenceField field(random_values(rng, n, d));
    const double err = grad_check(params, field, 4, seed + static_cast<std::uint64_t>(t));
    worst = std::max(worst, err);
    o.table.add({static_cast<long>(t), err});
  }
  o.check(worst < tol, "max_rel_err=" + fmt(worst) + " < " + fmt(tol));
  return o;
}

TaskDataset dataset_from(const ExperimentConfig& c) {
  const std::string task = c.get("task");
  if (task == "listops-mini") {
    ListOpsOptions o;
    o.max_len = positive(c, "max_len");
    o.max_depth = positive(c, "max_depth");
    o.train_size = positive(c, "train_size");
    o.val_size = positive(c, "val_size");
    o.seed = c.get_u64("seed");
    return make_listops_mini(o);
  }
  if (task == "denoise-1d") {
    DenoiseOptions o;
    o.length = positive(c, "max_len");
    o.train_size = positive(c, "train_size");
    o.val_size = positive(c, "val_size");
    o.seed = c.get_u64("seed");
    return make_denoise_1d(o);
  }
  throw ConfigError("key 'task': unknown task '" + task + "'");
}

ModelConfig model_from(const ExperimentConfig& c, const TaskDataset& ds) {
  ModelConfig m;
  m.dim = positive(c, "dim");
  m.layers = positive(c, "layers");
  m.heads = positive(c, "heads");
  const long hidden = c.get_int("mlp_hidden");
  m.mlp_hidden = hidden > 0 ? static_cast<int>(hidden) : 4 * m.dim;
  m.vocab = ds.vocab;
  m.max_len = ds.max_len;
  m.num_classes = ds.num_classes;
  m.dropout = c.get_double("dropout");
  m.pde.scales = c.get_int_list("scales");
  m.pde.post_norm = c.get_bool("post_norm");
  m.pde.boundary = boundary_from_string(c.get("boundary"));
  m.pde.tied = c.get_bool("tied");
  m.pde_alpha_init = c.get_double("alpha_init");
  if (!(m.pde_alpha_init > 0.0 && m.pde_alpha_init < m.pde.alpha_bound))
    throw ConfigError("key 'alpha_init' must lie in (0, 0.5)");
  m.seed = c.get_u64("seed");
  return m;
}

TrainOptions train_options_from(const ExperimentConfig& c) {
  TrainOptions t;
  t.epochs = positive(c, "epochs");
  t.batch = positive(c, "batch");
  t.lr = c.get_double("lr");
  t.momentum = c.get_double("momentum");
  t.clip_norm = c.get_double("clip");
  t.warmup_steps = static_cast<int>(c.get_int("warmup"));
  t.cosine = c.get_bool("cosine");
  t.freeze_pde = c.get_bool("freeze_pde");
  t.train_limit = static_cast<int>(c.get_int("train_limit"));
  const double target = c.get_double("target_acc");
  if (target > 0.0) t.target_accuracy = target;
  t.seed = c.get_u64("seed");
  return t;
}

Outcome cmd_train(const ExperimentConfig& c, const RunOptions& run) {
  const TaskDataset ds = dataset_from(c);
  ModelConfig mc = model_from(c, ds);
  mc.position = position_from_string(c.get("position"));
  Model model = build_model(mc);
  const TrainReport rep = train(model, ds, train_options_from(c));
  Outcome o;
  o.table.columns = {"epoch", "loss", "val_acc", "sec"};
  for (const auto& e : rep.epochs)
    o.table.add({static_cast<long>(e.epoch), e.train_loss, e.val_accuracy, run.deterministic ? 0.0 : e.seconds});
  o.note("task " + ds.name + ": " + std::to_string(ds.train.size()) + " train / " + std::to_string(ds.val.size()) + " val");
  o.note("position " + std::string(to_string(mc.position)) + ", parameters " + std::to_string(model.parameter_count()) +
         " (diffusion " + std::to_string(model.pde_parameter_count()) + ")");
  o.note("majority-class accuracy " + fmt(ds.majority_accuracy()));
  o.note("final val accuracy " + fmt(rep.final_val_accuracy()) + ", best " + fmt(rep.best_val_accuracy()));
  if (model.has_pde()) {
    o.note("alpha range over " + std::to_string(rep.logged_steps) + " logged steps [" + fmt(rep.min_alpha) + ", " +
           fmt(rep.max_alpha) + "], max channel sum " + fmt(rep.max_channel_sum));
    o.note("final mean effective alpha per scale:");
    for (Eigen::Index k = 0; k < rep.final_alpha.rows(); ++k)
      o.note("  h=" + std::to_string(model.pde_params().scales[static_cast<std::size_t>(k)]) + " alpha " +
             fmt(rep.final_alpha.row(k).mean()) + " weight " + fmt(rep.final_mix_weights(k)));
  }
  o.check(rep.cfl_violations == 0, std::to_string(rep.cfl_violations) + " CFL violations");
  return o;
}

Outcome cmd_rank(const ExperimentConfig& c, const RunOptions& run) {
  const TaskDataset ds = dataset_from(c);
  const ModelConfig mc = model_from(c, ds);
  EvaluateOptions eo;
  eo.train = train_options_from(c);
  eo.identity_limit = c.get_bool("identity");
  eo.jobs = run.deterministic ? 1 : run.jobs;
  const std::string pos = c.get("positions");
  if (pos != "all") {
    eo.positions.clear();
    std::istringstream in(pos);
    std::string item;
    while (std::getline(in, item, ',')) eo.positions.push_back(position_from_string(item));
  }
  const int n_seeds = positive(c, "seeds");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(c.get_u64("seed") + static_cast<std::uint64_t>(i));
  const auto rows = evaluate_positions(mc, ds, seeds, eo);
  Outcome o;
  o.table.columns = {"rank", "position", "mean_acc", "std_acc"};
  for (int i = 0; i < n_seeds; ++i) o.table.columns.push_back("acc_seed" + std::to_string(seeds[static_cast<std::size_t>(i)]));
  o.table.columns.push_back("cfl_violations");
  long violations = 0;
  const PositionRow* baseline = nullptr;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<CsvCell> cells{static_cast<long>(r + 1), std::string(to_string(rows[r].position)), rows[r].mean,
                               rows[r].stddev};
    for (double a : rows[r].accuracies) cells.emplace_back(a);
    cells.emplace_back(rows[r].cfl_violations);
    o.table.add(std::move(cells));
    violations += rows[r].cfl_violations;
    if (rows[r].position == IntegrationPosition::None) baseline = &rows[r];
    o.note(std::to_string(r + 1) + ". " + to_string(rows[r].position) + "  " + fmt(rows[r].mean) + " +- " +
           fmt(rows[r].stddev));
  }
  o.note("majority-class accuracy " + fmt(ds.majority_accuracy()));
  o.check(violations == 0, std::to_string(violations) + " CFL violations across all runs");
  if (eo.identity_limit && baseline) {
    bool all = true;
    for (const auto& r : rows) all = all && intervals_overlap(r, *baseline);
    o.check(all, "every variant overlaps the baseline within +-1 std");
  }
  return o;
}

Outcome cmd_retention(const ExperimentConfig& c, const RunOptions& run) {
  RetentionConfig rc;
  rc.chain_depth = static_cast<int>(c.get_int("depth"));
  rc.trials = static_cast<int>(c.get_int("trials"));
  rc.bins = static_cast<int>(c.get_int("bins"));
  rc.length = positive(c, "length");
  rc.flip_prob = c.get_double("flip");
  rc.projections = positive(c, "projections");
  rc.smoothing = DiffusionLayerParams::make(2, c.get_int_list("scales"));
  const double alpha = c.get_double("alpha");
  if (!(alpha > 0.0 && alpha < rc.smoothing.alpha_bound)) throw ConfigError("key 'alpha' must lie in (0, 0.5)");
  rc.smoothing.set_uniform_alpha(alpha);
  rc.seed = c.get_u64("seed");
  const int reps = positive(c, "repetitions");
  std::vector<RetentionEstimate> est(static_cast<std::size_t>(reps));
  parallel_for(est.size(), run.deterministic ? 1 : run.jobs, [&](std::size_t r) {
    RetentionConfig local = rc;
    local.seed = rc.seed + r;
    est[r] = estimate_retention(local);
  });
  Outcome o;
  o.table.columns = {"repetition", "depth", "rho", "info_raw", "info_smoothed"};
  int nonpositive = 0;
  for (int r = 0; r < reps; ++r) {
    const auto& e = est[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < e.depths.size(); ++i)
      o.table.add({static_cast<long>(r), static_cast<long>(e.depths[i]), e.rho[i], e.info_raw[i], e.info_smoothed[i]});
    for (const auto& w : e.warnings) o.note("warning (repetition " + std::to_string(r) + "): " + w);
    nonpositive += e.spearman <= 0.0 ? 1 : 0;
    if (reps <= 5) {
      std::string line = "repetition " + std::to_string(r) + " rho:";
      for (double v : e.rho) line += " " + fmt(v);
      o.note(line + "  spearman " + fmt(e.spearman));
    }
  }
  o.note(std::to_string(est[0].samples) + " samples per depth (trials x projections)");
  const double fraction = static_cast<double>(nonpositive) / reps;
  o.note("spearman(depth, rho) <= 0 in " + std::to_string(nonpositive) + "/" + std::to_string(reps) + " repetitions");
  if (reps > 1)
    o.check(fraction >= c.get_double("min_fraction"), "share " + fmt(fraction) + " >= " + c.get("min_fraction"));
  return o;
}

Outcome cmd_bench(const ExperimentConfig& c, const RunOptions& run) {
  ComplexityOptions co;
  co.diffusion_grid.clear();
  co.attention_grid.clear();
  for (int l : c.get_int_list("L_grid")) co.diffusion_grid.push_back(l);
  for (int l : c.get_int_list("attention_grid")) co.attention_grid.push_back(l);
  co.channels = positive(c, "d");
  co.scales = positive(c, "K");
  co.k_length = positive(c, "k_length");
  co.reps = positive(c, "reps");
  const auto rep = bench_complexity(co);
  Outcome o;
  o.table.columns = {"kind", "L", "K", "median_sec", "iqr_ratio", "inner"};
  auto add = [&](const std::string& kind, const TimingPoint& p) {
    o.table.add({kind, p.length, static_cast<long>(p.scales), p.median_seconds, p.iqr_ratio, p.inner});
  };
  for (const auto& p : rep.diffusion) add("diffusion", p);
  for (const auto& p : rep.attention) add("attention", p);
  add("k-base", rep.k_base);
  add("k-doubled", rep.k_doubled);
  for (const auto& w : rep.warnings) o.note("warning: " + w);
  (void)run;
  o.check(rep.diffusion_fit.slope >= 0.85 && rep.diffusion_fit.slope <= 1.15,
          "diffusion slope " + fmt(rep.diffusion_fit.slope) + " in [0.85, 1.15]");
  o.check(rep.diffusion_fit.r_squared >= 0.98, "diffusion R^2 " + fmt(rep.diffusion_fit.r_squared) + " >= 0.98");
  o.check(rep.attention_fit.slope >= 1.7 && rep.attention_fit.slope <= 2.3,
          "attention slope " + fmt(rep.attention_fit.slope) + " in [1.7, 2.3]");
  o.check(rep.attention_fit.r_squared >= 0.98, "attention R^2 " + fmt(rep.attention_fit.r_squared) + " >= 0.98");
  o.check(rep.k_ratio >= 1.6 && rep.k_ratio <= 2.4, "K-doubling ratio " + fmt(rep.k_ratio) + " in [1.6, 2.4]");
  return o;
}

Outcome dispatch(const ExperimentConfig& c, const RunOptions& run) {
  const auto& s = c.subcommand();
  if (s == "spectrum") return cmd_spectrum(c);
  if (s == "stability") return cmd_stability(c);
  if (s == "heatkernel") return cmd_heatkernel(c);
  if (s == "fitscales") return cmd_fitscales(c);
  if (s == "flow") return cmd_flow(c);
  if (s == "sync") return cmd_sync(c);
  if (s == "gradcheck") return cmd_gradcheck(c);
  if (s == "train") return cmd_train(c, run);
  if (s == "rank-positions") return cmd_rank(c, run);
  if (s == "retention") return cmd_retention(c, run);
  if (s == "bench-complexity") return cmd_bench(c, run);
  throw ConfigError("unknown subcommand '" + s + "'");
}

}  // namespace

int run(const ExperimentConfig& config, const RunOptions& options) {
  std::ostream& log = options.log ? *options.log : std::cerr;
  Outcome outcome;
  try {
    outcome = dispatch(config, options);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidStencil& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitAssertion;
  }
  std::string summary = config.header() + "\n";
  for (const auto& line : outcome.summary) summary += line + "\n";
  summary += std::string("status: ") + (outcome.ok ? "ok" : "FAILED") + "\n";
  write_text_file(config.get("out"), outcome.table.render(config));
  write_text_file(config.summary_path(), summary);
  if (options.log) *options.log << summary;
  return outcome.ok ? kExitOk : kExitAssertion;
}

}  // namespace pdelab
