#include "pdelab/positions.hpp"

#include <algorithm>
#include <cstring>

#include "pdelab/errors.hpp"
#include "pdelab/parallel.hpp"
#include "pdelab/stats.hpp"

namespace pdelab {

std::vector<PositionRow> evaluate_positions(const ModelConfig& base, const TaskDataset& dataset,
                                            std::span<const std::uint64_t> seeds, const EvaluateOptions& options) {
  if (seeds.size() < 3) throw InvalidArgument("position evaluation needs at least 3 seeds");
  if (options.positions.empty()) throw InvalidArgument("no positions to evaluate");
  const std::size_t n_pos = options.positions.size();
  const std::size_t n_seed = seeds.size();
  std::vector<TrainReport> reports(n_pos * n_seed);
  std::vector<double> acc(n_pos * n_seed);

  parallel_for(n_pos * n_seed, options.jobs, [&](std::size_t job) {
    const std::size_t pi = job / n_seed;
    const std::size_t si = job % n_seed;
    ModelConfig cfg = base;
    cfg.position = options.positions[pi];
    cfg.seed = seeds[si];
    Model model = build_model(cfg);
    TrainOptions opts = options.train;
    opts.seed = seeds[si];
    if (options.identity_limit && model.has_pde()) {
      DiffusionLayerParams p = model.pde_params();
      p.raw_alpha.setConstant(-40.0);
      model.set_pde_params(p);
      opts.freeze_pde = true;
    }
    reports[job] = train(model, dataset, opts);
    acc[job] = reports[job].final_val_accuracy();
  });

  std::vector<PositionRow> rows;
  for (std::size_t pi = 0; pi < n_pos; ++pi) {
    PositionRow row;
    row.position = options.positions[pi];
    for (std::size_t si = 0; si < n_seed; ++si) {
      const auto& rep = reports[pi * n_seed + si];
      row.accuracies.push_back(acc[pi * n_seed + si]);
      row.cfl_violations += rep.cfl_violations;
      row.logged_steps += rep.logged_steps;
    }
    row.mean = stats::mean(row.accuracies);
    row.stddev = stats::stddev(row.accuracies);
    rows.push_back(std::move(row));
  }
  sort_ranking(rows);
  return rows;
}

void sort_ranking(std::vector<PositionRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const PositionRow& a, const PositionRow& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return std::strcmp(to_string(a.position), to_string(b.position)) < 0;
  });
}

bool intervals_overlap(const PositionRow& a, const PositionRow& b) {
  return a.mean - a.stddev <= b.mean + b.stddev && b.mean - b.stddev <= a.mean + a.stddev;
}

void PositionValueWeights::validate() const {
  if (w_info < 0.0 || w_distortion < 0.0 || w_cost < 0.0) throw InvalidArgument("value weights must be nonnegative");
  if (w_info == 0.0 && w_distortion == 0.0 && w_cost == 0.0) throw InvalidArgument("value weights must not all be zero");
}

double position_value(double info, double distortion, double cost, const PositionValueWeights& w) {
  return w.w_info * info - w.w_distortion * distortion - w.w_cost * cost;
}

std::size_t best_position(std::span<const PositionMetrics> candidates, const PositionValueWeights& w) {
  if (candidates.empty()) throw InvalidArgument("no candidates");
  w.validate();
  std::size_t best = 0;
  double best_value = position_value(candidates[0].info, candidates[0].distortion, candidates[0].cost, w);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = position_value(candidates[i].info, candidates[i].distortion, candidates[i].cost, w);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

}  // namespace pdelab
