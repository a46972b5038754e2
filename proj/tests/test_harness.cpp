#include <doctest.h>

#include <soundseq/harness.hpp>

#include "test_helpers.hpp"

using namespace soundseq;
using namespace soundseq::test;

namespace {

// Small scenario so Monte-Carlo unit tests stay fast: the acceptance suite
// runs the full-size experiments.
Scenario small_scenario(std::uint64_t schedule_seed) {
  Scenario scenario;
  scenario.config = small_config();
  scenario.tx_array = synthesize_phase_mode_uca(scenario.config.num_tx);
  scenario.rx_array = synthesize_phase_mode_uca(scenario.config.num_rx);
  if (schedule_seed == 0) {
    scenario.schedule = SwitchMatrix::uniform(scenario.config.num_tx,
                                              scenario.config.num_snapshots);
  } else {
    Rng rng(schedule_seed);
    scenario.schedule = SwitchMatrix::random(
        scenario.config.num_tx, scenario.config.num_snapshots, rng);
  }
  PathParams p;
  p.delay_s = 150e-9;
  p.dod_rad = 0.4;
  p.doa_rad = -1.2;
  p.doppler_hz = 4000.0;
  scenario.paths = {p};
  scenario.noise.sigma2 = 1.0;
  return scenario;
}

}  // namespace

TEST_CASE("ExperimentSpec: validation rejects empty SNR list and 0 trials") {
  ExperimentSpec spec;
  spec.scenario = small_scenario(1);
  spec.snr_db = {};
  spec.trials = 10;
  CHECK_THROWS_AS(spec.validate(), validation_error);
  spec.snr_db = {20.0};
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), validation_error);
}

TEST_CASE("monte_carlo: scrambled schedule attains the bound, uniform "
          "schedule aliases in Doppler") {
  ExperimentSpec spec;
  spec.scenario = small_scenario(7);
  spec.snr_db = {25.0};
  spec.trials = 24;
  spec.base_seed = 5;
  spec.jobs = 2;
  const RmseTable scrambled = monte_carlo(spec);
  REQUIRE(scrambled.rows.size() == 4);
  for (const RmseRow& row : scrambled.rows) {
    CHECK(row.sqrt_crlb > 0.0);
    CHECK(row.n_trials + scrambled.divergent.at(25.0) == spec.trials);
    if (row.n_trials >= 12) CHECK(row.rmse < 3.0 * row.sqrt_crlb);
  }

  // Sequential switching leaves exact Doppler aliases at multiples of 1/T0;
  // errors land on them and are counted as outliers.
  spec.scenario = small_scenario(0);
  const RmseTable uniform = monte_carlo(spec);
  for (const RmseRow& row : uniform.rows) {
    if (row.param == "nu_hz" && row.n_trials >= 12) {
      CHECK(row.rmse > 10.0 * row.sqrt_crlb);
      CHECK(row.n_outliers > 0);
    }
  }
}

TEST_CASE("monte_carlo: deterministic for a fixed base seed") {
  ExperimentSpec spec;
  spec.scenario = small_scenario(7);
  spec.snr_db = {20.0};
  spec.trials = 8;
  spec.base_seed = 11;
  spec.jobs = 2;
  const RmseTable a = monte_carlo(spec);
  spec.jobs = 1;  // parallelism must not change the aggregate
  const RmseTable b = monte_carlo(spec);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].rmse == b.rows[i].rmse);
    CHECK(a.rows[i].n_trials == b.rows[i].n_trials);
  }
}

TEST_CASE("delay_doppler_spectrum: zero observation gives a zero map") {
  const SounderSetup setup = small_setup(3);
  Observation y;
  y.samples.zeros(setup.config().total_samples());
  const arma::vec delays =
      arma::linspace(0.0, 0.8 / setup.config().freq_spacing_hz, 16);
  const arma::vec dopplers = arma::linspace(
      -doppler_halfwidth_hz(setup.config(), true),
      doppler_halfwidth_hz(setup.config(), true), 24);
  const arma::mat spec =
      delay_doppler_spectrum(setup, y, delays, dopplers, 8);
  CHECK(spec.max() == 0.0);
  CHECK(spec.n_rows == 16);
  CHECK(spec.n_cols == 24);
}

TEST_CASE("delay_doppler_spectrum: noiseless path peaks at its cell") {
  const SounderSetup setup = small_setup(13);  // scrambled
  PathParams p;
  p.delay_s = 200e-9;
  p.dod_rad = 0.9;
  p.doa_rad = -0.3;
  p.doppler_hz = 11000.0;
  const Observation y = setup.signal({p});
  const arma::vec delays =
      arma::linspace(0.0, 0.9 / setup.config().freq_spacing_hz, 31);
  const double half = doppler_halfwidth_hz(setup.config(), true);
  const arma::vec dopplers = arma::linspace(-half, half, 41);
  const arma::mat spec =
      delay_doppler_spectrum(setup, y, delays, dopplers, 16);
  arma::uword peak_delay, peak_doppler;
  spec.max(peak_delay, peak_doppler);
  CHECK(std::abs(delays(peak_delay) - p.delay_s) <=
        delays(1) - delays(0));
  CHECK(std::abs(dopplers(peak_doppler) - p.doppler_hz) <=
        dopplers(1) - dopplers(0));
}

TEST_CASE("bundled scenarios: resolve and validate") {
  for (const ScenarioSpec& spec :
       {single_path_high_doppler_spec(), single_path_low_doppler_spec(),
        two_path_spec()}) {
    const Scenario scenario = resolve_scenario(spec, ".");
    scenario.config.validate();
    CHECK(!scenario.paths.empty());
    const SounderSetup setup = make_setup(scenario);
    CHECK(setup.config().total_samples() == 12288);
  }
  // Path powers: two-path scenario keeps the documented 5.69 dB gap.
  const Scenario two = resolve_scenario(two_path_spec(), ".");
  const double ratio_db =
      linear_to_db(std::norm(two.paths[0].weight) /
                   std::norm(two.paths[1].weight));
  CHECK(ratio_db == doctest::Approx(-13.13 + 18.82).epsilon(1e-9));
}
