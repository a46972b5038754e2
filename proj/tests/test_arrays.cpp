#include <doctest.h>

#include <soundseq/arrays.hpp>
#include <soundseq/rng.hpp>

#include "test_helpers.hpp"

using namespace soundseq;

namespace {

// Analytic pattern used to generate UCA samples; serves as the oracle for
// reconstruction checks.
cx uca_element(double radius, double element_angle, double phi) {
  return std::polar(1.0, two_pi * radius * std::cos(phi - element_angle));
}

}  // namespace

TEST_CASE("eadf_from_samples: constant pattern has only mode zero") {
  arma::cx_mat pattern(1, 16, arma::fill::ones);
  double err = 0.0;
  const Eadf eadf = eadf_from_samples(pattern, 2, &err);
  REQUIRE(eadf.max_mode() == 2);
  CHECK(std::abs(eadf.coeffs()(0, 2) - cx(1.0, 0.0)) < 1e-14);
  for (arma::uword k : {0u, 1u, 3u, 4u}) {
    CHECK(std::abs(eadf.coeffs()(0, k)) < 1e-14);
  }
  CHECK(err < 1e-13);
}

TEST_CASE("eadf_from_samples: single positive mode") {
  const arma::uword n_az = 8;
  arma::cx_mat pattern(1, n_az);
  for (arma::uword n = 0; n < n_az; ++n) {
    pattern(0, n) = std::polar(1.0, two_pi * static_cast<double>(n) / n_az);
  }
  const Eadf eadf = eadf_from_samples(pattern, 1);
  CHECK(std::abs(eadf.coeffs()(0, 2) - cx(1.0, 0.0)) < 1e-14);  // mode +1
  CHECK(std::abs(eadf.coeffs()(0, 1)) < 1e-14);                 // mode 0
  CHECK(std::abs(eadf.coeffs()(0, 0)) < 1e-14);                 // mode -1
}

TEST_CASE("eadf_from_samples: 8-element UCA reconstructs to 1e-10") {
  const arma::uword n_az = 256;
  const double radius = 0.5;
  arma::cx_mat pattern(8, n_az);
  for (arma::uword m = 0; m < 8; ++m) {
    for (arma::uword n = 0; n < n_az; ++n) {
      pattern(m, n) = uca_element(radius, two_pi * m / 8.0,
                                  two_pi * static_cast<double>(n) / n_az);
    }
  }
  double err = 0.0;
  eadf_from_samples(pattern, 20, &err);
  CHECK(err < 1e-10);
}

TEST_CASE("eadf_from_samples: rejects too few azimuth samples") {
  arma::cx_mat pattern(1, 4, arma::fill::ones);
  CHECK_THROWS_AS(eadf_from_samples(pattern, 2), validation_error);
}

TEST_CASE("steering: isotropic single antenna") {
  arma::cx_mat coeffs(1, 5, arma::fill::zeros);
  coeffs(0, 2) = 1.0;  // mode 0
  const Eadf eadf(coeffs);
  for (double phi : {-2.5, 0.0, 0.7, 3.1}) {
    const arma::cx_vec b = eadf.steering(phi);
    REQUIRE(b.n_elem == 1);
    CHECK(std::abs(b(0) - cx(1.0, 0.0)) < 1e-14);
  }
}

TEST_CASE("steering: UCA rotation by one sector permutes antennas") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  Rng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const double phi = rng.uniform() * two_pi - pi;
    const arma::cx_vec a = uca.steering(phi);
    const arma::cx_vec b = uca.steering(phi + two_pi / 8.0);
    // Rotating the look direction by one element spacing relabels elements.
    for (arma::uword m = 0; m < 8; ++m) {
      CHECK(std::abs(b((m + 1) % 8) - a(m)) < 1e-9);
    }
  }
}

TEST_CASE("steering: nonzero norm on a full-circle sweep") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  for (int i = 0; i < 360; ++i) {
    const double phi = -pi + two_pi * i / 360.0;
    CHECK(arma::norm(uca.steering(phi)) > 0.0);
  }
}

TEST_CASE("steering: periodic in 2*pi") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  Rng rng(5);
  for (int trial = 0; trial < 16; ++trial) {
    const double phi = (rng.uniform() - 0.5) * 10.0;
    const arma::cx_vec a = uca.steering(phi);
    const arma::cx_vec b = uca.steering(phi + two_pi);
    CHECK(arma::abs(b - a).max() < 1e-12);
  }
}

TEST_CASE("steering_derivative: constant and single-mode patterns") {
  arma::cx_mat constant(1, 3, arma::fill::zeros);
  constant(0, 1) = 1.0;
  CHECK(arma::abs(Eadf(constant).steering_derivative(0.911)).max() < 1e-15);

  arma::cx_mat single(1, 3, arma::fill::zeros);
  single(0, 2) = 1.0;  // mode +1
  const double phi = -1.234;
  const arma::cx_vec d = Eadf(single).steering_derivative(phi);
  CHECK(std::abs(d(0) - j_unit * std::polar(1.0, phi)) < 1e-14);
}

TEST_CASE("steering_derivative: matches central finite differences") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  const double h = 1e-6;
  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 32; ++trial) {
    const double phi = rng.uniform() * two_pi - pi;
    const arma::cx_vec fd =
        (uca.steering(phi + h) - uca.steering(phi - h)) / (2.0 * h);
    const arma::cx_vec an = uca.steering_derivative(phi);
    worst = std::max(worst, arma::abs(an - fd).max() / arma::norm(an));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("synthesize_uca: single element at radius zero is isotropic") {
  const Eadf one = synthesize_uca(1, 0.0, 4);
  for (double phi : {-3.0, 0.0, 1.0}) {
    const arma::cx_vec b = one.steering(phi);
    CHECK(std::abs(b(0) - cx(1.0, 0.0)) < 1e-12);
  }
}

TEST_CASE("synthesize_uca: unit-modulus elements give constant norm") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  for (int i = 0; i < 256; ++i) {
    const double phi = -pi + two_pi * i / 256.0;
    CHECK(arma::norm(uca.steering(phi)) == doctest::Approx(std::sqrt(8.0))
                                               .epsilon(1e-6));
  }
}

TEST_CASE("synthesize_uca: half-turn relates to a half cyclic shift") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  const arma::cx_vec front = uca.steering(0.0);
  const arma::cx_vec back = uca.steering(pi);
  // Element m facing phi = pi sees what element m+M/2 saw at phi = 0.
  for (arma::uword m = 0; m < 8; ++m) {
    CHECK(std::abs(back(m) - front((m + 4) % 8)) < 1e-9);
  }
}

TEST_CASE("synthesize_uca: seeded perturbation is reproducible and small") {
  const Eadf a = synthesize_uca(8, 0.5, 20, 0.05, 99);
  const Eadf b = synthesize_uca(8, 0.5, 20, 0.05, 99);
  CHECK(arma::abs(a.coeffs() - b.coeffs()).max() == 0.0);
  const Eadf ideal = synthesize_uca(8, 0.5, 20);
  const double rel = arma::abs(a.coeffs() - ideal.coeffs()).max() /
                     arma::abs(ideal.coeffs()).max();
  CHECK(rel > 0.0);
  CHECK(rel < 0.5);
}

TEST_CASE("synthesize_phase_mode_uca: unit modulus and ramp absorption") {
  const Eadf pm = synthesize_phase_mode_uca(8);
  REQUIRE(pm.num_antennas() == 8);
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const double phi = rng.uniform() * two_pi - pi;
    const arma::cx_vec b = pm.steering(phi);
    for (arma::uword m = 0; m < 8; ++m) {
      CHECK(std::abs(std::abs(b(m)) - 1.0) < 1e-12);
    }
    // A per-antenna linear ramp is a rotation of the look direction.
    const double delta = rng.uniform() * two_pi - pi;
    const arma::cx_vec rotated = pm.steering(phi + delta);
    const arma::cx_vec ramped = b % arma::exp(
        j_unit * delta * arma::regspace<arma::vec>(0, 7));
    const cx phase_fix = std::polar(1.0, 3.0 * delta);  // mode offset
    CHECK(arma::abs(rotated * phase_fix - ramped).max() < 1e-10);
  }
}

TEST_CASE("eadf invariants: steering is linear in the coefficients") {
  const Eadf a = synthesize_uca(4, 0.3, 8);
  const Eadf b = synthesize_uca(4, 0.7, 8);
  const Eadf sum(a.coeffs() + b.coeffs());
  Rng rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    const double phi = rng.uniform() * two_pi - pi;
    const arma::cx_vec lhs = sum.steering(phi);
    const arma::cx_vec rhs = a.steering(phi) + b.steering(phi);
    CHECK(arma::abs(lhs - rhs).max() < 1e-13);
  }
}

TEST_CASE("eadf invariants: grid Parseval identity") {
  const Eadf uca = synthesize_uca(8, 0.5, 20);
  const arma::uword k = uca.max_mode();
  const arma::uword n_grid = 4 * (k + 1);
  for (arma::uword m = 0; m < uca.num_antennas(); ++m) {
    double grid_mean = 0.0;
    for (arma::uword n = 0; n < n_grid; ++n) {
      const double phi = two_pi * static_cast<double>(n) / n_grid;
      grid_mean += std::norm(uca.steering(phi)(m));
    }
    grid_mean /= n_grid;
    const double coeff_energy =
        arma::accu(arma::square(arma::abs(uca.coeffs().row(m))));
    CHECK(std::abs(grid_mean - coeff_energy) < 1e-10);
  }
}
