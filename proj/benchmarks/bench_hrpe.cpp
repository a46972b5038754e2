#include <benchmark/benchmark.h>

#include <soundseq/harness.hpp>
#include <soundseq/hrpe.hpp>
#include <soundseq/simulate.hpp>

using namespace soundseq;

namespace {

struct BenchFixture {
  Scenario scenario = resolve_scenario(single_path_low_doppler_spec(), ".");
  SounderSetup setup = make_setup(scenario);
  Observation obs;

  BenchFixture() {
    Rng rng(7);
    obs = synth(setup, scale_to_snr(setup, scenario.paths, scenario.noise,
                                    1e3 * setup.config().total_samples()),
                scenario.noise, rng);
  }
};

void BM_CorrelationGridTensor(benchmark::State& state) {
  static BenchFixture fx;
  const SearchGrid grid = SearchGrid::defaults(fx.setup.config());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        correlation_grid_tensor(fx.setup, fx.obs, grid, 1.0));
  }
}
BENCHMARK(BM_CorrelationGridTensor)->Unit(benchmark::kMillisecond);

void BM_JacobianAndFim(benchmark::State& state) {
  static BenchFixture fx;
  PathSet paths = fx.scenario.paths;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fim(fx.setup, paths, 1.0));
  }
}
BENCHMARK(BM_JacobianAndFim)->Unit(benchmark::kMillisecond);

void BM_LmRefine(benchmark::State& state) {
  static BenchFixture fx;
  PathSet start = fx.scenario.paths;
  start[0].doppler_hz += 40.0;
  start[0].dod_rad += 0.02;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lm_refine(fx.setup, fx.obs, start, 1.0));
  }
}
BENCHMARK(BM_LmRefine)->Unit(benchmark::kMillisecond);

}  // namespace
