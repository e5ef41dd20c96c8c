#include <benchmark/benchmark.h>

#include "gml/baselines.hpp"
#include "gml/gossip.hpp"
#include "gml/losses.hpp"
#include "gml/metrics.hpp"

using namespace gml;

namespace {

Grid noise(std::int64_t n, Rng& rng, double lo, double hi) {
  Grid g({n, n});
  for (double& v : g) v = rng.uniform(lo, hi);
  return g;
}

Grid blob(std::int64_t n) {
  Grid m({n, n});
  for (std::int64_t y = n / 4; y < n / 2; ++y)
    for (std::int64_t x = n / 4; x < n / 2; ++x) m[static_cast<std::size_t>(y * n + x)] = 1.0;
  return m;
}

void BM_Forward(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng = rng_derive(1, "bench");
  const ModelWeights w = init_weights(ArchSpec{}, rng);
  const Grid img = noise(n, rng, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(w, img));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Arg(64);

void BM_ForwardBackward(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng = rng_derive(2, "bench");
  const ModelWeights w = init_weights(ArchSpec{}, rng);
  const Grid img = noise(n, rng, -1, 1);
  const std::span<const Grid> x(&img, 1);
  const Grid mask = blob(n);
  for (auto _ : state) {
    const ForwardTrace tr = forward_trace(w, x);
    benchmark::DoNotOptimize(backward(w, x, tr, jaccard_distance(tr.prob, mask).grad));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(32)->Arg(64);

void BM_ReceiverLoss(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng = rng_derive(3, "bench");
  const Grid pr = noise(n, rng, 0.01, 0.99), ps = noise(n, rng, 0.01, 0.99), mask = blob(n);
  LossOptions opts;
  opts.kld_variant = state.range(1) ? KldVariant::Full : KldVariant::Eq1;
  for (auto _ : state) benchmark::DoNotOptimize(mutual_loss_receiver(pr, ps, mask, opts));
}
BENCHMARK(BM_ReceiverLoss)->Args({32, 0})->Args({32, 1})->Args({128, 0});

void BM_Dsc(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng = rng_derive(4, "bench");
  const Grid p = binarize(noise(n, rng, 0, 1)), t = blob(n);
  for (auto _ : state) benchmark::DoNotOptimize(dsc(p, t));
}
BENCHMARK(BM_Dsc)->Arg(32)->Arg(128);

void BM_CheckpointRoundTrip(benchmark::State& state) {
  Rng rng = rng_derive(5, "bench");
  const ModelWeights w = init_weights(ArchSpec{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(checkpoint_read(checkpoint_write(w)));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(checkpoint_size(w.arch)));
}
BENCHMARK(BM_CheckpointRoundTrip);

void BM_MutualExchange(benchmark::State& state) {
  SiteGenSpec spec{"bench", static_cast<int>(state.range(0)), 3.0, 6.0, 1.6, 1.0, 1.0, 0.0};
  Rng data_rng = rng_derive(6, "bench/data");
  const Dataset d = generate_site(spec, 32, data_rng);
  TrainingOptions opts;
  opts.seed = 6;
  const std::vector<DatasetSplit> splits{{d, d, d}, {d, d, d}};
  const auto sites = make_sites(splits, opts);
  const Schedule sched;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mutual_learning_exchange(sites[0], sites[1].model, sched, {21, 1, 0, 6, opts.loss}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MutualExchange)->Arg(10)->Arg(25);

void BM_FedAvgAggregate(benchmark::State& state) {
  Rng rng = rng_derive(7, "bench");
  std::vector<ModelWeights> models;
  std::vector<double> alphas;
  for (int i = 0; i < state.range(0); ++i) {
    models.push_back(init_weights(ArchSpec{}, rng));
    alphas.push_back(1.0 + i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fedavg_aggregate(models, alphas));
}
BENCHMARK(BM_FedAvgAggregate)->Arg(3)->Arg(30);

}  // namespace
BENCHMARK_MAIN();
