#include <benchmark/benchmark.h>

#include "cityexpo/exposure.h"
#include "cityexpo/forest.h"
#include "cityexpo/geo.h"
#include "cityexpo/pfli.h"
#include "cityexpo/rng.h"
#include "cityexpo/synth.h"

namespace cityexpo {
namespace {

std::vector<Location> random_locations(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Location> locs;
  for (std::size_t i = 0; i < n; ++i) {
    locs.push_back({"l" + std::to_string(i), rng.uniform(-60, 60), rng.uniform(-170, 170)});
  }
  return locs;
}

void BM_Upgma(benchmark::State& state) {
  const auto locs = random_locations(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(upgma_cluster(locs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Upgma)->Arg(125)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)
    ->Complexity();

struct ScoringFixture {
  World world = generate_world(WorldConfig::ci());
  IndicationModel model = build_indication_model(world.masked);
  PfliWeights weights{{1.0, 0.8}, {0.5, 0.4}, {0.3, 0.2}, 0.1, 0.0, 0.0};
};

void BM_PfliScoresAllUsers(benchmark::State& state) {
  static const ScoringFixture f;
  const auto& ds = f.world.masked;
  for (auto _ : state) {
    for (UserIndex u = 0; u < ds.num_users(); ++u) {
      benchmark::DoNotOptimize(pfli_scores(make_user_view(ds, u), f.model, f.weights));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.num_users()));
}
BENCHMARK(BM_PfliScoresAllUsers)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& state) {
  Rng rng(3);
  FeatureMatrix x;
  std::vector<double> y;
  for (int i = 0; i < state.range(0); ++i) {
    std::vector<double> row(11, 0.0);
    row[rng.below(8)] = 1.0;
    for (std::size_t c = 8; c < 11; ++c) row[c] = rng.uniform();
    y.push_back(rng.bernoulli(0.2 + 0.6 * row[8]) ? 1.0 : 0.0);
    x.push_row(row);
  }
  ForestConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(x, y, cfg));
}
BENCHMARK(BM_ForestTrain)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cityexpo
BENCHMARK_MAIN();
