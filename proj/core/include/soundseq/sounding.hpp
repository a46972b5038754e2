#pragma once

#include <armadillo>
#include <vector>

#include "soundseq/arrays.hpp"
#include "soundseq/common.hpp"

namespace soundseq {
class Rng;

// Sounder geometry and timing. One MIMO snapshot sweeps all num_tx transmit
// dwells; each dwell sweeps all num_rx receive slots; each slot measures
// num_freq tones. Adjacent snapshots are snapshot_period_s apart.
struct SoundingConfig {
  arma::uword num_freq = 1;       // M_f
  double freq_spacing_hz = 1.0;   // delta f
  arma::uword num_rx = 1;         // M_R
  arma::uword num_tx = 1;         // M_T
  arma::uword num_snapshots = 1;  // T
  double rx_dwell_s = 1.0;        // t0
  double tx_dwell_s = 1.0;        // t1
  double snapshot_period_s = 1.0; // T0

  void validate() const;
  arma::uword total_samples() const {
    return num_freq * num_rx * num_tx * num_snapshots;
  }
  // Baseband tone frequencies centered on 0: f_m = (m - (M_f-1)/2) * delta_f.
  arma::vec freq_grid_hz() const;

  // Timing variant with the snapshot separation (and the dwells with it)
  // compressed by num_tx; used with a uniform schedule it trades antennas
  // for an num_tx-times faster snapshot rate.
  SoundingConfig dense_variant() const;
};

// TX switching schedule: column t lists, per transmit antenna, the dwell slot
// (1..num_tx) it occupies during snapshot t. Every column must be a
// permutation of {1..num_tx}.
struct SwitchMatrix {
  arma::umat entries;  // num_tx x num_snapshots, 1-based slot indices

  static SwitchMatrix uniform(arma::uword num_tx, arma::uword num_snapshots);
  static SwitchMatrix random(arma::uword num_tx, arma::uword num_snapshots,
                             Rng& rng);
  void validate() const;  // names the offending column on failure
};

// Switching instant of antenna m_T in snapshot t, in seconds:
// eta[m,t] = (t-1)*T0 + (S[m,t]-1)*t1   (1-based indices).
// With back-to-back sweeps (T0 == M_T*t1) this is (t-1)*M_T*t1 + (S-1)*t1.
// Sounders usually idle between sweeps (T0 > M_T*t1); that slack keeps the
// dwell-grid Nyquist point 1/(2*t1) outside the designed Doppler range.
arma::mat eta_from_schedule(const SoundingConfig& config,
                            const SwitchMatrix& schedule);

// One specular propagation path.
struct PathParams {
  double delay_s = 0.0;    // tau >= 0
  double dod_rad = 0.0;    // azimuth direction of departure, (-pi, pi]
  double doa_rad = 0.0;    // azimuth direction of arrival, (-pi, pi]
  double doppler_hz = 0.0; // nu
  cx weight{1.0, 0.0};     // gamma
};
using PathSet = std::vector<PathParams>;

void validate_paths(const PathSet& paths);

// Complex samples in the fixed layout: frequency index fastest, then RX
// antenna, then TX dwell, then snapshot.
struct Observation {
  arma::cx_vec samples;
};

// Bundles the sounder configuration, both array models and the realized TX
// switching times. All basis builders are pure; the object is immutable
// after construction and safe to share across threads.
class SounderSetup {
 public:
  SounderSetup(SoundingConfig config, Eadf tx_array, Eadf rx_array,
               const SwitchMatrix& schedule);

  const SoundingConfig& config() const { return config_; }
  const Eadf& tx_array() const { return tx_array_; }
  const Eadf& rx_array() const { return rx_array_; }
  const SwitchMatrix& schedule() const { return schedule_; }
  const arma::mat& eta() const { return eta_; }

  // Frequency response of a delay: [b_f]_m = exp(-j*2*pi*f_m*tau), length M_f.
  arma::cx_vec freq_basis(double delay_s) const;

  // RX array response weighted by the per-slot Doppler rotation:
  // steering(doa) .* exp(j*2*pi*nu*m_R*t0), m_R = 1..M_R.
  arma::cx_vec rx_basis(double doa_rad, double doppler_hz) const;

  // Stacked per-snapshot TX responses: block t is
  // steering(dod) .* exp(j*2*pi*nu*eta[:,t]); length M_T*T.
  arma::cx_vec tx_time_basis(double dod_rad, double doppler_hz) const;

  // Kronecker product tx_time_basis x rx_basis x freq_basis (frequency
  // fastest), length M = M_f*M_R*M_T*T. Ignores the path weight.
  arma::cx_vec basis_vector(const PathParams& path) const;

  // One basis column per path.
  arma::cx_mat basis_matrix(const PathSet& paths) const;

  // Noiseless observation B * gamma.
  Observation signal(const PathSet& paths) const;

 private:
  SoundingConfig config_;
  Eadf tx_array_;
  Eadf rx_array_;
  SwitchMatrix schedule_;
  arma::mat eta_;
};

// Alias-free half-width of the Doppler estimation range: 1/(2*T0) for the
// uniform (sequential) schedule, M_T/(2*T0) when the TX schedule is free.
double doppler_halfwidth_hz(const SoundingConfig& config, bool scrambled_tx);

}  // namespace soundseq
