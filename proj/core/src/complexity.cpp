#include "pdelab/complexity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "pdelab/diffusion_layer.hpp"
#include "pdelab/errors.hpp"
#include "pdelab/stats.hpp"

namespace pdelab {

namespace {

using Clock = std::chrono::steady_clock;

double tick_seconds() {
  return static_cast<double>(Clock::period::num) / static_cast<double>(Clock::period::den);
}

double run_seconds(const std::function<void()>& fn, long inner) {
  const auto t0 = Clock::now();
  for (long i = 0; i < inner; ++i) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

std::vector<int> ladder(int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(1 << i);
  return out;
}

struct Probe {
  std::function<void()> fn;
  long length = 0;
  int scales = 0;
};

Probe diffusion_probe(long length, int channels, int k) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(length) * 131 + static_cast<std::uint64_t>(k));
  auto x = std::make_shared<Eigen::MatrixXd>(random_matrix(length, channels, rng));
  auto params = std::make_shared<DiffusionLayerParams>(DiffusionLayerParams::make(channels, ladder(k)));
  auto y = std::make_shared<Eigen::MatrixXd>();
  return {[x, params, y] { apply_into(*x, *params, *y); }, length, k};
}

Probe attention_probe(long length, int channels) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(length) * 977);
  struct State {
    Eigen::MatrixXd x, wq, wk, wv, q, k, v, scores, out;
    double s = 1.0;
  };
  auto st = std::make_shared<State>();
  st->x = random_matrix(length, channels, rng);
  st->s = 1.0 / std::sqrt(static_cast<double>(channels));
  st->wq = random_matrix(channels, channels, rng) * st->s;
  st->wk = random_matrix(channels, channels, rng) * st->s;
  st->wv = random_matrix(channels, channels, rng) * st->s;
  return {[st] {
            st->q.noalias() = st->x * st->wq;
            st->k.noalias() = st->x * st->wk;
            st->v.noalias() = st->x * st->wv;
            st->scores.noalias() = st->q * st->k.transpose();
            st->scores *= st->s;
            const Eigen::VectorXd mx = st->scores.rowwise().maxCoeff();
            st->scores = (st->scores.colwise() - mx).array().exp();
            const Eigen::VectorXd denom = st->scores.rowwise().sum();
            st->scores.array().colwise() /= denom.array();
            st->out.noalias() = st->scores * st->v;
          },
          length, 0};
}

long calibrate(const std::function<void()>& fn, double min_rep_seconds) {
  const double min_seconds = std::max(min_rep_seconds, 50.0 * tick_seconds());
  long inner = 1;
  double t = run_seconds(fn, inner);  // warmup
  while (t < min_seconds) {
    if (inner > (1L << 40)) throw TimerResolution("cannot resolve call duration with the steady clock");
    inner *= t > 0.0 ? std::clamp(static_cast<long>(std::ceil(1.5 * min_seconds / t)), 2L, 1024L) : 16L;
    t = run_seconds(fn, inner);
  }
  return inner;
}

TimingPoint summarize(std::vector<double> samples, long inner) {
  TimingPoint p;
  p.reps = static_cast<int>(samples.size());
  p.inner = inner;
  p.median_seconds = stats::median(samples);
  if (p.median_seconds * static_cast<double>(inner) < 50.0 * tick_seconds())
    throw TimerResolution("median repetition shorter than 50 clock ticks");
  p.iqr_ratio = stats::iqr(samples) / p.median_seconds;
  return p;
}

// Repetitions are taken round-robin over all probes so slow drift in machine
// load lands on every length alike instead of tilting the fit.
std::vector<TimingPoint> time_interleaved(const std::vector<Probe>& probes, int reps, double min_rep_seconds) {
  std::vector<long> inner;
  for (const auto& p : probes) inner.push_back(calibrate(p.fn, min_rep_seconds));
  std::vector<std::vector<double>> samples(probes.size());
  for (int r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < probes.size(); ++i)
      samples[i].push_back(run_seconds(probes[i].fn, inner[i]) / static_cast<double>(inner[i]));
  std::vector<TimingPoint> out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    TimingPoint p = summarize(std::move(samples[i]), inner[i]);
    p.length = probes[i].length;
    p.scales = probes[i].scales;
    out.push_back(p);
  }
  return out;
}

void check_grid(const std::vector<long>& grid, const char* name) {
  std::vector<long> g = grid;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  if (g.size() < 5) throw InvalidArgument(std::string(name) + " needs at least 5 distinct lengths");
  if (g.front() < 1 || g.back() < 16 * g.front()) throw InvalidArgument(std::string(name) + " must span at least 16x");
}

void variance_warning(const std::vector<TimingPoint>& points, const char* name, std::vector<std::string>& warnings) {
  for (const auto& p : points)
    if (p.iqr_ratio > 0.2)
      warnings.push_back(std::string(name) + " L=" + std::to_string(p.length) + ": IQR/median " +
                         std::to_string(p.iqr_ratio) + " exceeds 20%");
}

}  // namespace

TimingPoint time_call(const std::function<void()>& fn, int reps, double min_rep_seconds) {
  if (reps < 1) throw InvalidArgument("reps must be >= 1");
  const long inner = calibrate(fn, min_rep_seconds);
  std::vector<double> samples;
  for (int r = 0; r < reps; ++r) samples.push_back(run_seconds(fn, inner) / static_cast<double>(inner));
  return summarize(std::move(samples), inner);
}

ScalingFit fit_scaling(const std::vector<TimingPoint>& points) {
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(std::log(static_cast<double>(p.length)));
    y.push_back(std::log(p.median_seconds));
  }
  const auto fit = stats::linear_fit(x, y);
  return {fit.slope, fit.r_squared};
}

ComplexityReport bench_complexity(const ComplexityOptions& options) {
  check_grid(options.diffusion_grid, "diffusion grid");
  check_grid(options.attention_grid, "attention grid");
  if (options.reps < 7) throw InvalidArgument("reps must be >= 7");
  if (options.channels < 1 || options.scales < 1) throw InvalidArgument("channels and scales must be >= 1");
  const long largest_scale = 1L << (2 * options.scales - 1);
  if (options.k_length <= largest_scale) throw InvalidArgument("k_length must exceed the largest doubled scale");
  for (long l : options.diffusion_grid)
    if (l <= (1L << (options.scales - 1))) throw InvalidArgument("diffusion lengths must exceed the largest scale");

  std::vector<Probe> probes;
  for (long l : options.diffusion_grid) probes.push_back(diffusion_probe(l, options.channels, options.scales));
  for (long l : options.attention_grid) probes.push_back(attention_probe(l, options.channels));
  probes.push_back(diffusion_probe(options.k_length, options.channels, options.scales));
  probes.push_back(diffusion_probe(options.k_length, options.channels, 2 * options.scales));
  const auto points = time_interleaved(probes, options.reps, options.min_rep_seconds);

  ComplexityReport report;
  const auto nd = options.diffusion_grid.size();
  const auto na = options.attention_grid.size();
  report.diffusion.assign(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(nd));
  report.attention.assign(points.begin() + static_cast<std::ptrdiff_t>(nd),
                          points.begin() + static_cast<std::ptrdiff_t>(nd + na));
  report.k_base = points[nd + na];
  report.k_doubled = points[nd + na + 1];
  report.diffusion_fit = fit_scaling(report.diffusion);
  report.attention_fit = fit_scaling(report.attention);
  report.k_ratio = report.k_doubled.median_seconds / report.k_base.median_seconds;
  variance_warning(report.diffusion, "diffusion", report.warnings);
  variance_warning(report.attention, "attention", report.warnings);
  return report;
}

}  // namespace pdelab
