#pragma once

#include <armadillo>
#include <cstdint>

#include "soundseq/common.hpp"

namespace soundseq {

// Fourier-mode representation of an array's azimuth response (effective
// aperture distribution function). Row m of `coeffs` holds the modes of
// antenna m's complex pattern b_m(phi) = sum_k coeffs(m, k+K) * exp(j*k*phi)
// for k = -K..K, so the reconstructed pattern is a trigonometric polynomial
// and 2*pi-periodic by construction.
//
// Immutable after construction; safe for concurrent read-only use.
class Eadf {
 public:
  Eadf() = default;
  Eadf(arma::cx_mat coeffs);

  arma::uword num_antennas() const { return coeffs_.n_rows; }
  arma::uword max_mode() const { return (coeffs_.n_cols - 1) / 2; }
  const arma::cx_mat& coeffs() const { return coeffs_; }

  // Array response at azimuth phi (radians): length-M complex vector.
  arma::cx_vec steering(double phi) const;

  // d/dphi of the response, same shape. Analytic: mode k picks up a factor jk.
  arma::cx_vec steering_derivative(double phi) const;

  // Responses for a whole angle grid, one column per angle.
  arma::cx_mat steering_matrix(const arma::vec& phis) const;

 private:
  arma::cx_mat coeffs_;  // M x (2K+1)
};

// Builds an Eadf from a pattern sampled on the uniform azimuth grid
// phi_n = 2*pi*n/N_az, n = 0..N_az-1. Modes beyond +-max_mode are truncated.
// If max_abs_error is non-null it receives the largest absolute
// reconstruction error over the sample grid.
// Requires N_az >= 2*max_mode + 1.
Eadf eadf_from_samples(const arma::cx_mat& pattern, arma::uword max_mode,
                       double* max_abs_error = nullptr);

// Uniform circular array of isotropic elements with far-field phase model
// b_m(phi) = exp(j*2*pi*radius*cos(phi - 2*pi*(m-1)/M)), radius in carrier
// wavelengths. Sampled on a 4*(max_mode+1)-point grid and fitted by
// eadf_from_samples.
Eadf synthesize_uca(arma::uword num_antennas, double radius_wavelengths,
                    arma::uword max_mode);

// Same, with seeded per-antenna complex gain perturbations
// g_m = 1 + perturbation * CN(0,1) emulating element non-ideality.
Eadf synthesize_uca(arma::uword num_antennas, double radius_wavelengths,
                    arma::uword max_mode, double perturbation,
                    std::uint64_t seed);

// Beamforming-network-fed circular array in which antenna m carries the
// single azimuth phase mode k_m = (m-1) - floor((M-1)/2), i.e.
// b_m(phi) = exp(j*k_m*phi). The M modes cover all residues modulo M, so the
// manifold absorbs any per-antenna linear phase ramp exactly:
// b_m(phi) * exp(j*(m-1)*delta) = exp(j*k_1*delta) * b_m(phi + delta).
// Every element has unit magnitude response, so ||b(phi)|| = sqrt(M) for all
// phi. This is the desk-scale stand-in for a calibrated sounder array: it
// shows the full grating structure of sequentially switched sounders while
// keeping the response azimuth-invariant.
Eadf synthesize_phase_mode_uca(arma::uword num_antennas);

}  // namespace soundseq
