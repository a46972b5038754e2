#include <benchmark/benchmark.h>

#include <soundseq/ambiguity.hpp>
#include <soundseq/harness.hpp>
#include <soundseq/rng.hpp>

using namespace soundseq;

namespace {

Scenario bench_scenario() { return resolve_scenario(base_scenario_spec(), "."); }

void BM_XTFast(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const SounderSetup setup = make_setup(s);
  Rng rng(1);
  double phi = 0.3, phi_prime = -1.1, dnu = 1200.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(x_T_fast(setup, phi, phi_prime, dnu));
    dnu += 0.37;
  }
}
BENCHMARK(BM_XTFast);

void BM_CostF6(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const TxAmbiguityMap map(s.tx_array, s.config,
                           AmbiguityGridSpec::defaults(s.config));
  const arma::mat eta = eta_from_schedule(s.config, s.schedule);
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.cost_f_p(eta, 6));
  }
}
BENCHMARK(BM_CostF6);

void BM_Nsl(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const TxAmbiguityMap map(s.tx_array, s.config,
                           AmbiguityGridSpec::defaults(s.config));
  const arma::mat eta = eta_from_schedule(s.config, s.schedule);
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.nsl(eta));
  }
}
BENCHMARK(BM_Nsl);

}  // namespace

BENCHMARK_MAIN();
