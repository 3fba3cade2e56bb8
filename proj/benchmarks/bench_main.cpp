#include <benchmark/benchmark.h>

#include <random>

#include "fedsim/compressor.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/server.hpp"

using namespace fedsim;

namespace {

std::vector<double> normal_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_LossAndGrad(benchmark::State& state) {
  const auto kind = state.range(0) ? ModelKind::mlp_one_hidden : ModelKind::logistic_regression;
  const auto spec = make_model_spec(kind, 50, 10, 32);
  const std::size_t rows = 64;
  const auto params = normal_vector(spec.param_dim(), 1);
  const auto x = normal_vector(rows * 50, 2);
  std::vector<int> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = static_cast<int>(i % 10);
  std::vector<double> g(spec.param_dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(spec, params, Batch{x, y}, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows));
}
BENCHMARK(BM_LossAndGrad)->Arg(0)->Arg(1);

void BM_Fwht(benchmark::State& state) {
  auto v = normal_vector(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    fwht(v);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Fwht)->Range(64, 1 << 16);

void BM_Encode(benchmark::State& state) {
  const std::size_t dim = 10000;
  const ParamLayout layout{{"w", 0, 100, 100}};
  const ParamVector delta(normal_vector(dim, 4));
  const CompressionScheme schemes[] = {CompressionScheme::quantize(2), CompressionScheme::rotate_quantize(2),
                                       CompressionScheme::random_mask(0.1), CompressionScheme::low_rank(4)};
  const Codec codec(schemes[state.range(0)], 5);
  state.SetLabel(codec.scheme().describe());
  std::uint32_t round = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(codec.encode(delta, layout, round++, 0, 1));
  }
}
BENCHMARK(BM_Encode)->DenseRange(0, 3);

void BM_Aggregate(benchmark::State& state) {
  std::vector<ClientUpdate> ups(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ups.size(); ++i) {
    ups[i].client_id = i;
    ups[i].n_examples = 1 + i;
    ups[i].delta = ParamVector(normal_vector(10000, i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate(ups, Weighting::by_examples));
  }
}
BENCHMARK(BM_Aggregate)->Arg(4)->Arg(32);

void BM_EngineRound(benchmark::State& state) {
  RunConfig cfg;
  cfg.num_clients = 8;
  cfg.rounds = 1;
  cfg.compression = CompressionScheme::quantize(4);
  const Setup setup = prepare(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(cfg, setup).final_params);
  }
}
BENCHMARK(BM_EngineRound)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
