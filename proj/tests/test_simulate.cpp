#include <doctest.h>

#include <soundseq/simulate.hpp>

#include "test_helpers.hpp"

using namespace soundseq;
using namespace soundseq::test;

TEST_CASE("synth: vanishing noise variance approaches the pure signal") {
  const SounderSetup setup = small_setup(3);
  Rng path_rng(1);
  const PathParams p = random_path(path_rng, setup.config());
  const Observation clean = setup.signal({p});
  NoiseModel noise;
  noise.sigma2 = 1e-30;
  Rng rng(2);
  const Observation noisy = synth(setup, {p}, noise, rng);
  CHECK(arma::abs(noisy.samples - clean.samples).max() < 1e-12);
}

TEST_CASE("synth: zero paths give noise with the requested variance") {
  SoundingConfig cfg = default_config();
  const SounderSetup setup = default_uniform_setup();
  NoiseModel noise;
  noise.sigma2 = 2.5;
  Rng rng(7);
  const Observation obs = synth(setup, {}, noise, rng);
  REQUIRE(obs.samples.n_elem >= 10000);
  const double var =
      arma::accu(arma::square(arma::abs(obs.samples))) / obs.samples.n_elem;
  CHECK(std::abs(var - noise.sigma2) / noise.sigma2 < 0.05);
}

TEST_CASE("synth: noise is white (small lagged autocorrelation)") {
  const SounderSetup setup = default_uniform_setup();
  NoiseModel noise;
  noise.sigma2 = 1.0;
  Rng rng(11);
  const Observation obs = synth(setup, {}, noise, rng);
  const arma::uword n = obs.samples.n_elem;
  for (arma::uword lag : {1u, 7u, 64u}) {
    cx acc{0.0, 0.0};
    for (arma::uword i = 0; i + lag < n; ++i) {
      acc += obs.samples(i) * std::conj(obs.samples(i + lag));
    }
    CHECK(std::abs(acc) / static_cast<double>(n - lag) <
          3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("synth: deterministic given the seed") {
  const SounderSetup setup = small_setup(5);
  Rng path_rng(13);
  const PathParams p = random_path(path_rng, setup.config());
  NoiseModel noise;
  Rng rng_a(99), rng_b(99);
  const Observation a = synth(setup, {p}, noise, rng_a);
  const Observation b = synth(setup, {p}, noise, rng_b);
  CHECK(arma::abs(a.samples - b.samples).max() == 0.0);
}

TEST_CASE("synth: high-Doppler reference path produces a valid observation") {
  const SounderSetup setup = default_uniform_setup();
  PathParams p;
  p.delay_s = 1117.3e-9;
  p.dod_rad = deg_to_rad(21.3);
  p.doa_rad = wrap_angle(deg_to_rad(160.0));
  p.doppler_hz = 80.6;
  NoiseModel noise;
  Rng rng(17);
  const Observation obs = synth(setup, {p}, noise, rng);
  CHECK(obs.samples.is_finite());
}

TEST_CASE("scale_to_snr: sqrt(2) weight scaling doubles the SNR") {
  const SounderSetup setup = small_setup(7);
  Rng path_rng(19);
  PathParams p = random_path(path_rng, setup.config());
  NoiseModel noise;
  noise.sigma2 = 0.7;
  const double rho = snr_linear(setup, {p}, noise);
  p.weight *= std::sqrt(2.0);
  CHECK(snr_linear(setup, {p}, noise) == doctest::Approx(2.0 * rho));
}

TEST_CASE("scale_to_snr: achieves the target within 1e-9 relative") {
  const SounderSetup setup = small_setup(9);
  Rng path_rng(23);
  const PathSet paths = {random_path(path_rng, setup.config()),
                         random_path(path_rng, setup.config())};
  NoiseModel noise;
  noise.sigma2 = 3.0;
  const double target = 1234.5;
  const PathSet scaled = scale_to_snr(setup, paths, noise, target);
  CHECK(std::abs(snr_linear(setup, scaled, noise) - target) / target < 1e-9);
  // Relative weights preserved.
  CHECK(std::abs(scaled[0].weight / scaled[1].weight -
                 paths[0].weight / paths[1].weight) < 1e-12);
}

TEST_CASE("scale_to_snr: zero signal cannot be scaled") {
  const SounderSetup setup = small_setup(11);
  Rng path_rng(29);
  PathParams p = random_path(path_rng, setup.config());
  p.weight = cx(0.0, 0.0);
  NoiseModel noise;
  CHECK_THROWS_AS(scale_to_snr(setup, {p}, noise, 10.0), validation_error);
}

TEST_CASE("NoiseModel: rejects non-positive variance") {
  NoiseModel noise;
  noise.sigma2 = 0.0;
  CHECK_THROWS_AS(noise.validate(), validation_error);
}
