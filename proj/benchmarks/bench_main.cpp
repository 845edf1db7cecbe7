#include <benchmark/benchmark.h>

#include "qarank/evaluation.hpp"
#include "qarank/model.hpp"
#include "qarank/training.hpp"

using namespace qarank;

namespace {

ModelParams bench_model(ModelVariant variant) {
  Rng rng(11);
  return make_random_model(variant, /*vocab=*/2000, /*embed_dim=*/100,
                           /*hidden=*/141, /*attention_dim=*/0, /*filters=*/100,
                           /*filter_width=*/2, /*kmax=*/1, rng);
}

std::vector<int> bench_tokens(std::size_t len, Rng& rng) {
  std::vector<int> t(len);
  for (int& id : t) id = static_cast<int>(1 + rng.index(1999));
  return t;
}

void BM_matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix a(n, n), b(n, n);
  for (double& v : a.data) v = rng.uniform(-1, 1);
  for (double& v : b.data) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(141);

void BM_bilstm_encode(benchmark::State& state) {
  ModelParams params = bench_model(ModelVariant::LstmMax);
  Rng rng(2);
  const std::vector<int> tokens = bench_tokens(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    EncodedSequence enc = encode_tokens(tokens, params);
    benchmark::DoNotOptimize(enc.outputs.data.data());
  }
}
BENCHMARK(BM_bilstm_encode)->Arg(20)->Arg(100);

void BM_forward_backward(benchmark::State& state) {
  ModelParams params = bench_model(static_cast<ModelVariant>(state.range(0)));
  Rng rng(3);
  const std::vector<int> q = bench_tokens(10, rng);
  const std::vector<int> pos = bench_tokens(40, rng);
  const std::vector<int> neg = bench_tokens(40, rng);
  GradientSet grads = GradientSet::zeros_like(params);
  for (auto _ : state) {
    LossCache cache;
    forward_loss(q, pos, neg, params, 5.0, nullptr, &cache);
    grads.clear();
    backward(cache, params, grads);
    benchmark::DoNotOptimize(grads.embeddings.data.data());
  }
}
BENCHMARK(BM_forward_backward)
    ->Arg(static_cast<int>(ModelVariant::LstmMax))
    ->Arg(static_cast<int>(ModelVariant::AttAvg))
    ->Arg(static_cast<int>(ModelVariant::AttCnn));

void BM_metrics(benchmark::State& state) {
  Rng rng(4);
  std::vector<RankedPool> pools;
  for (int qi = 0; qi < 200; ++qi) {
    std::vector<std::pair<std::string, double>> scores;
    for (int ai = 0; ai < 50; ++ai) {
      scores.emplace_back("a" + std::to_string(ai), rng.uniform(-1, 1));
    }
    pools.push_back(rank_pool("q" + std::to_string(qi), std::move(scores),
                              {"a" + std::to_string(rng.index(50))}));
  }
  for (auto _ : state) {
    double v = mean_average_precision(pools) + mean_reciprocal_rank(pools) +
               top1_accuracy(pools);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_metrics);

}  // namespace

BENCHMARK_MAIN();
