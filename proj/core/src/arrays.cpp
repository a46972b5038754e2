#include "soundseq/arrays.hpp"

#include <vector>

#include "soundseq/rng.hpp"

namespace soundseq {

namespace {

// exp(j*k*phi) for k = -K..K, as a column vector of length 2K+1.
arma::cx_vec mode_phases(arma::uword max_mode, double phi) {
  const double w = wrap_angle(phi);
  const arma::sword k_max = static_cast<arma::sword>(max_mode);
  arma::cx_vec e(2 * max_mode + 1);
  for (arma::sword k = -k_max; k <= k_max; ++k) {
    e(static_cast<arma::uword>(k + k_max)) = std::polar(1.0, k * w);
  }
  return e;
}

}  // namespace

Eadf::Eadf(arma::cx_mat coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.n_rows == 0) {
    throw validation_error("Eadf: num_antennas must be at least 1");
  }
  if (coeffs_.n_cols % 2 != 1) {
    throw validation_error(
        "Eadf: coeffs must have 2K+1 columns (modes -K..K)");
  }
  if (!coeffs_.is_finite()) {
    throw validation_error("Eadf: coeffs must be finite");
  }
}

arma::cx_vec Eadf::steering(double phi) const {
  return coeffs_ * mode_phases(max_mode(), phi);
}

arma::cx_vec Eadf::steering_derivative(double phi) const {
  const arma::sword k_max = static_cast<arma::sword>(max_mode());
  arma::cx_vec e = mode_phases(max_mode(), phi);
  for (arma::sword k = -k_max; k <= k_max; ++k) {
    e(static_cast<arma::uword>(k + k_max)) *= cx(0.0, static_cast<double>(k));
  }
  return coeffs_ * e;
}

arma::cx_mat Eadf::steering_matrix(const arma::vec& phis) const {
  arma::cx_mat out(num_antennas(), phis.n_elem);
  for (arma::uword i = 0; i < phis.n_elem; ++i) {
    out.col(i) = steering(phis(i));
  }
  return out;
}

Eadf eadf_from_samples(const arma::cx_mat& pattern, arma::uword max_mode,
                       double* max_abs_error) {
  const arma::uword n_az = pattern.n_cols;
  const arma::uword n_modes = 2 * max_mode + 1;
  if (n_az < n_modes) {
    throw validation_error(
        "eadf_from_samples: need at least 2*max_mode+1 = " +
        std::to_string(n_modes) + " azimuth samples, got " +
        std::to_string(n_az));
  }
  if (pattern.n_rows == 0) {
    throw validation_error("eadf_from_samples: pattern must have >= 1 row");
  }

  // Discrete Fourier series on the uniform grid phi_n = 2*pi*n/N.
  const arma::sword k_max = static_cast<arma::sword>(max_mode);
  arma::cx_mat dft(n_az, n_modes);
  for (arma::sword k = -k_max; k <= k_max; ++k) {
    for (arma::uword n = 0; n < n_az; ++n) {
      const double phi_n = two_pi * static_cast<double>(n) / n_az;
      dft(n, static_cast<arma::uword>(k + k_max)) =
          std::polar(1.0 / n_az, -k * phi_n);
    }
  }
  Eadf eadf(pattern * dft);

  if (max_abs_error != nullptr) {
    double err = 0.0;
    for (arma::uword n = 0; n < n_az; ++n) {
      const double phi_n = two_pi * static_cast<double>(n) / n_az;
      const arma::cx_vec rec = eadf.steering(phi_n);
      err = std::max(err, arma::abs(rec - pattern.col(n)).max());
    }
    *max_abs_error = err;
  }
  return eadf;
}

namespace {

arma::cx_mat uca_pattern(arma::uword num_antennas, double radius_wavelengths,
                         arma::uword n_az) {
  arma::cx_mat pattern(num_antennas, n_az);
  for (arma::uword m = 0; m < num_antennas; ++m) {
    const double element_angle = two_pi * static_cast<double>(m) / num_antennas;
    for (arma::uword n = 0; n < n_az; ++n) {
      const double phi_n = two_pi * static_cast<double>(n) / n_az;
      pattern(m, n) = std::polar(
          1.0, two_pi * radius_wavelengths * std::cos(phi_n - element_angle));
    }
  }
  return pattern;
}

}  // namespace

Eadf synthesize_uca(arma::uword num_antennas, double radius_wavelengths,
                    arma::uword max_mode) {
  if (num_antennas < 1) {
    throw validation_error("synthesize_uca: num_antennas must be >= 1");
  }
  if (radius_wavelengths < 0.0) {
    throw validation_error("synthesize_uca: radius must be >= 0");
  }
  const arma::uword n_az = 4 * (max_mode + 1);
  return eadf_from_samples(uca_pattern(num_antennas, radius_wavelengths, n_az),
                           max_mode);
}

Eadf synthesize_uca(arma::uword num_antennas, double radius_wavelengths,
                    arma::uword max_mode, double perturbation,
                    std::uint64_t seed) {
  Eadf ideal = synthesize_uca(num_antennas, radius_wavelengths, max_mode);
  Rng rng(seed);
  arma::cx_mat coeffs = ideal.coeffs();
  for (arma::uword m = 0; m < num_antennas; ++m) {
    coeffs.row(m) *= cx(1.0, 0.0) + perturbation * rng.complex_normal();
  }
  return Eadf(coeffs);
}

Eadf synthesize_phase_mode_uca(arma::uword num_antennas) {
  if (num_antennas < 1) {
    throw validation_error(
        "synthesize_phase_mode_uca: num_antennas must be >= 1");
  }
  const arma::sword offset = static_cast<arma::sword>((num_antennas - 1) / 2);
  arma::sword k_max = 0;
  for (arma::uword m = 0; m < num_antennas; ++m) {
    k_max = std::max(k_max, std::abs(static_cast<arma::sword>(m) - offset));
  }
  arma::cx_mat coeffs(num_antennas, 2 * static_cast<arma::uword>(k_max) + 1,
                      arma::fill::zeros);
  for (arma::uword m = 0; m < num_antennas; ++m) {
    const arma::sword k = static_cast<arma::sword>(m) - offset;
    coeffs(m, static_cast<arma::uword>(k + k_max)) = 1.0;
  }
  return Eadf(coeffs);
}

}  // namespace soundseq
