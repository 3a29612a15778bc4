#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "pdelab/diffusion_layer.hpp"

namespace {

constexpr Eigen::Index kChannels = 64;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::vector<int> ladder(int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(1 << i);
  return out;
}

void BM_DiffusionApply(benchmark::State& state) {
  const auto length = static_cast<Eigen::Index>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const Eigen::MatrixXd x = random_matrix(length, kChannels, 1);
  const auto params = pdelab::DiffusionLayerParams::make(kChannels, ladder(k));
  Eigen::MatrixXd y;
  for (auto _ : state) {
    pdelab::apply_into(x, params, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(state.range(0));
  state.SetItemsProcessed(state.iterations() * length * kChannels * k);
}
BENCHMARK(BM_DiffusionApply)
    ->ArgsProduct({benchmark::CreateRange(256, 8192, 2), {3}})
    ->Complexity(benchmark::oN);
BENCHMARK(BM_DiffusionApply)->ArgsProduct({{2048}, {1, 2, 3, 4, 6, 8}});

// Training-path forward: also fills the cache used by backward.
void BM_DiffusionForwardCached(benchmark::State& state) {
  const auto length = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd x = random_matrix(length, kChannels, 2);
  const auto params = pdelab::DiffusionLayerParams::make(kChannels);
  pdelab::LayerCache cache;
  for (auto _ : state) {
    Eigen::MatrixXd y = pdelab::forward(x, params, cache);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DiffusionForwardCached)->RangeMultiplier(2)->Range(256, 8192)->Complexity(benchmark::oN);

void BM_Attention(benchmark::State& state) {
  const auto length = static_cast<Eigen::Index>(state.range(0));
  const double s = 1.0 / std::sqrt(static_cast<double>(kChannels));
  const Eigen::MatrixXd x = random_matrix(length, kChannels, 3);
  const Eigen::MatrixXd wq = random_matrix(kChannels, kChannels, 4) * s;
  const Eigen::MatrixXd wk = random_matrix(kChannels, kChannels, 5) * s;
  const Eigen::MatrixXd wv = random_matrix(kChannels, kChannels, 6) * s;
  Eigen::MatrixXd q, k, v, scores, out;
  for (auto _ : state) {
    q.noalias() = x * wq;
    k.noalias() = x * wk;
    v.noalias() = x * wv;
    scores.noalias() = q * k.transpose();
    scores *= s;
    const Eigen::VectorXd mx = scores.rowwise().maxCoeff();
    scores = (scores.colwise() - mx).array().exp();
    const Eigen::VectorXd denom = scores.rowwise().sum();
    scores.array().colwise() /= denom.array();
    out.noalias() = scores * v;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Attention)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared);

}  // namespace

BENCHMARK_MAIN();
