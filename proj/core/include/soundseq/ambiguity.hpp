#pragma once

#include <armadillo>

#include "soundseq/sounding.hpp"

namespace soundseq {

// Evaluation grid for the TX ambiguity upper bound: reference departure
// angles phi, probe angles phi_prime (both radians, increasing, in
// (-pi, pi]) and Doppler differences delta_nu in [0, nu_upper_hz] with
// delta_nu(0) == 0.
struct AmbiguityGridSpec {
  arma::vec phi;
  arma::vec phi_prime;
  arma::vec delta_nu;
  double nu_upper_hz = 0.0;

  // 72 reference and probe angles (5 degree cells, midpoints), 16*M_T+1
  // Doppler differences up to nu_up = M_T/(2*T0).
  static AmbiguityGridSpec defaults(const SoundingConfig& config);
  static AmbiguityGridSpec make(const SoundingConfig& config,
                                arma::uword n_phi, arma::uword n_phi_prime,
                                arma::uword n_nu);
  void validate() const;
};

// Normalized inner product of two full basis vectors,
// b(a)^H b(b) / (||b(a)|| ||b(b)||). |x_tot| <= 1 with equality at a == b.
cx x_tot(const SounderSetup& setup, const PathParams& a, const PathParams& b);

// Delay factor (from the frequency basis alone) and the remainder; their
// product equals x_tot.
struct SplitAmbiguity {
  cx x_tau;
  cx x_kappa;
};
SplitAmbiguity x_split(const SounderSetup& setup, const PathParams& a,
                       const PathParams& b);

// TX-plus-time factor computed literally from stacked tx_time_basis vectors.
cx x_T_direct(const SounderSetup& setup, double dod_rad, double dod_prime_rad,
              double nu_hz, double nu_prime_hz);

// Same quantity via the factorization
//   [b(phi) .* conj(b(phi'))]^H v(dnu) / (T ||b(phi)|| ||b(phi')||),
// v_m(dnu) = sum_t exp(j*2*pi*dnu*eta[m,t]); depends on the Doppler
// difference only.
cx x_T_fast(const SounderSetup& setup, double dod_rad, double dod_prime_rad,
            double delta_nu_hz);

struct NslResult {
  double nsl_db = 0.0;
  // Set when some main-lobe region reaches the last Doppler row of the grid,
  // i.e. the grid could not isolate the main lobe.
  bool main_lobe_clipped = false;
};

// Precomputed steering tables for repeated schedule evaluation on a fixed
// grid (annealing inner loop). Grid sweeps reduce in a fixed order with
// pairwise summation, so costs are bit-reproducible.
class TxAmbiguityMap {
 public:
  TxAmbiguityMap(const Eadf& tx_array, const SoundingConfig& config,
                 AmbiguityGridSpec grid);

  const AmbiguityGridSpec& grid() const { return grid_; }

  // Riemann sum of |X_T|^p over the grid cells, scaled by cell volume.
  double cost_f_p(const arma::mat& eta, int p) const;

  // Largest sidelobe of |X_T| in dB, maximized over reference angles. The
  // main lobe at reference phi is the 4-connected component (wrapping in
  // phi') of grid cells with |X_T| >= 0.5 containing (phi' = phi,
  // delta_nu = 0); sidelobes are the local maxima outside it.
  NslResult nsl(const arma::mat& eta) const;

  // |X_T| over (phi_prime, delta_nu) for one reference angle index.
  arma::mat amplitude_map(const arma::mat& eta, arma::uword phi_index) const;

 private:
  arma::cx_mat doppler_table(const arma::mat& eta) const;  // M_T x N_nu

  SoundingConfig config_;
  AmbiguityGridSpec grid_;
  arma::cx_mat steer_phi_;        // M_T x N_phi
  arma::cx_mat steer_phi_prime_;  // M_T x N_phi'
  arma::vec norm_phi_;
  arma::vec norm_phi_prime_;
  arma::vec weight_phi_;
  arma::vec weight_phi_prime_;
  arma::vec weight_nu_;
};

// One-shot conveniences over TxAmbiguityMap.
double cost_f_p(const Eadf& tx_array, const SoundingConfig& config,
                const arma::mat& eta, const AmbiguityGridSpec& grid, int p);
NslResult nsl(const Eadf& tx_array, const SoundingConfig& config,
              const arma::mat& eta, const AmbiguityGridSpec& grid);

}  // namespace soundseq
