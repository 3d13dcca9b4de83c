// Microbenchmarks for the hot paths: batched layer scoring, importance
// sampling, the training gradient and one Gibbs sweep.

#include <benchmark/benchmark.h>

#include "bihm/estimators.hpp"
#include "bihm/sampling.hpp"
#include "bihm/training.hpp"

namespace {

using namespace bihm;

Matrix random_binary(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  return m;
}

// ADULT-sized first layer, args: rows.
void BM_LayerLogProbRows(benchmark::State& state) {
  Rng rng(1);
  const BihmModel model = init_model({123, 100}, 1);
  const Index rows = state.range(0);
  const Matrix inputs = random_binary(rows, 100, rng);
  const Matrix targets = random_binary(rows, 123, rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer_log_prob_rows(model.p_layer(1), inputs, targets));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_LayerLogProbRows)->Arg(1)->Arg(100)->Arg(1000);

// args: K.
void BM_EstLogPtilde(benchmark::State& state) {
  Rng rng(2);
  const BihmModel model = init_model({123, 100, 70, 50, 25}, 2);
  const Vector x = random_binary(1, 123, rng).transpose();
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(est_log_ptilde(model, x, k, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstLogPtilde)->Arg(10)->Arg(100)->Arg(1000);

// One ADULT training minibatch, args: batch, K.
void BM_MinibatchGradient(benchmark::State& state) {
  Rng rng(3);
  const BihmModel model = init_model({123, 100, 70, 50, 25}, 3);
  const Matrix batch = random_binary(state.range(0), 123, rng);
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(minibatch_gradient(model, batch, k, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_MinibatchGradient)->Args({100, 10})->Args({100, 100})->Unit(benchmark::kMillisecond);

// args: visible size, default sampler settings.
void BM_GibbsSweep(benchmark::State& state) {
  Rng rng(4);
  const Index v = state.range(0);
  const BihmModel model = init_model({v, v / 2 + 1, v / 4 + 1}, 4);
  JointSample s = sample_p(model, rng);
  GibbsState chain{std::move(s.x), std::move(s.h)};
  const GibbsConfig cfg;
  for (auto _ : state) gibbs_sweep(model, chain, cfg, rng);
}
BENCHMARK(BM_GibbsSweep)->Arg(3)->Arg(123)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
