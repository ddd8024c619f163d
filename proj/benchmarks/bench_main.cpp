#include <benchmark/benchmark.h>

#include "bsdr/experiments.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/model.hpp"

namespace {

using namespace bsdr;

GridSpec square(int n, int horizon) {
    return GridSpec(n, n, {}, {0, n - 1}, {{n - 1, 0}}, horizon, FeatureMap::bias_goal_dist);
}

const BsdrParams kParams{Eigen::Vector2d(0.0, -1.0), Eigen::Vector2d(1.0, 2.0)};

void bm_log_partition(benchmark::State& state) {
    const GridSpec spec = square(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(log_partition(kParams, spec).log_z());
    state.SetComplexityN(state.range(0) * state.range(0) * state.range(1));
}
BENCHMARK(bm_log_partition)->Args({5, 10})->Args({11, 20})->Args({21, 40})->Complexity(benchmark::oN);

void bm_expected_features(benchmark::State& state) {
    const GridSpec spec = square(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const SoftBackup backup = log_partition(kParams, spec);
    for (auto _ : state) benchmark::DoNotOptimize(expected_features(kParams, spec, backup).expected.matrix);
}
BENCHMARK(bm_expected_features)->Args({5, 10})->Args({11, 20})->Args({21, 40});

void bm_sample(benchmark::State& state) {
    const GridSpec spec = square(11, 20);
    const SoftBackup backup = log_partition(kParams, spec);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_trajectory(kParams, spec, backup, ++seed));
}
BENCHMARK(bm_sample);

void bm_grid_posterior(benchmark::State& state) {
    const GridSpec spec = square(11, 20);
    const JointParams truth{Eigen::Vector2d(0.0, 1.0), {{"a", Eigen::Vector2d(1.0, 100.0)}}};
    const Dataset data = simulate_dataset(spec, truth, 200, 1);
    const auto points = static_cast<int>(state.range(0));
    std::vector<double> values;
    for (int i = 0; i < points; ++i) values.push_back(0.5 + i);
    const std::vector<GridAxis> axes{{{Coordinate::Block::reward, "", 0}, values},
                                     {{Coordinate::Block::reward, "", 1}, values},
                                     {{Coordinate::Block::rationality, "a", 0}, values},
                                     {{Coordinate::Block::rationality, "a", 1}, values}};
    for (auto _ : state) benchmark::DoNotOptimize(grid_posterior(data, axes, Prior::uniform_grid()).map_index());
    state.counters["grid_points"] = points * points * points * points;
}
BENCHMARK(bm_grid_posterior)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void bm_mle_objective(benchmark::State& state) {
    const GridSpec spec = square(7, 12);
    PopulationConfig pop{Eigen::Vector2d(0.0, -2.0), {{static_cast<int>(state.range(0)), Eigen::Vector2d(0.5, 0.0),
                                                        Eigen::Vector2d(2.0, 1.0)}}};
    const JointParams truth = draw_population(pop, 0);
    const DatasetSummary summary = summarize(simulate_dataset(spec, truth, 16, 0));
    for (auto _ : state) benchmark::DoNotOptimize(mle_objective(summary, spec, truth, Prior::gaussian(10.0)).value);
}
BENCHMARK(bm_mle_objective)->Arg(1)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
