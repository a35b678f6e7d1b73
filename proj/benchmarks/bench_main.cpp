#include <random>

#include <benchmark/benchmark.h>

#include "tsdec/inference.hpp"
#include "tsdec/tensor.hpp"
#include "tsdec/training.hpp"

namespace {

using namespace tsdec;

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool requires_grad = false) {
  std::normal_distribution<double> dist;
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return Tensor::from({rows, cols}, std::move(v), requires_grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_matrix(n, n, rng);
  const Tensor b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(8, 128);

void BM_Forward(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk_scale();
  const PatchedDecoder model(cfg, ModelWeights::initialize(cfg, 1));
  const auto tokens = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const Tensor x = random_matrix(tokens, cfg.input_width(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x).data().data());
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Arg(128);

void BM_Forecast(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk_scale();
  const Forecaster f(PatchedDecoder(cfg, ModelWeights::initialize(cfg, 1)), NormalizationMode::kPerWindow);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist;
  ForecastRequest req;
  req.context.resize(512);
  for (double& v : req.context) v = dist(rng);
  req.horizon = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(f.forecast(req).predictions.data());
}
BENCHMARK(BM_Forecast)->Arg(8)->Arg(96);

void BM_TrainStep(benchmark::State& state) {
  SyntheticCorpusSpec spec;
  PatternFamily fam;
  fam.name = "bench";
  fam.period_bands = {{8.0, 64.0}};
  spec.families = {fam};
  spec.groups = {{Granularity::kDaily, 32, 800, 800, "bench"}};
  const auto corpus = synth_corpus(spec, 4);
  TrainConfig tc;
  tc.batch_size = static_cast<std::size_t>(state.range(0));
  tc.total_steps = 1;
  tc.val_windows = 1;
  const ModelConfig cfg = ModelConfig::desk_scale();
  for (auto _ : state) benchmark::DoNotOptimize(train(corpus, cfg, tc).curve.size());
}
BENCHMARK(BM_TrainStep)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
