#include "soundseq/sounding.hpp"

#include <algorithm>

#include "soundseq/rng.hpp"

namespace soundseq {

void SoundingConfig::validate() const {
  if (num_freq < 1) throw validation_error("SoundingConfig.num_freq: must be >= 1");
  if (num_rx < 1) throw validation_error("SoundingConfig.num_rx: must be >= 1");
  if (num_tx < 1) throw validation_error("SoundingConfig.num_tx: must be >= 1");
  if (num_snapshots < 1) {
    throw validation_error("SoundingConfig.num_snapshots: must be >= 1");
  }
  if (!(freq_spacing_hz > 0.0)) {
    throw validation_error("SoundingConfig.freq_spacing_hz: must be > 0");
  }
  if (!(rx_dwell_s > 0.0)) {
    throw validation_error("SoundingConfig.rx_dwell_s: must be > 0");
  }
  if (!(tx_dwell_s > 0.0)) {
    throw validation_error("SoundingConfig.tx_dwell_s: must be > 0");
  }
  if (!(snapshot_period_s > 0.0)) {
    throw validation_error("SoundingConfig.snapshot_period_s: must be > 0");
  }
  if (tx_dwell_s < num_rx * rx_dwell_s) {
    throw validation_error(
        "SoundingConfig.tx_dwell_s: must be >= num_rx * rx_dwell_s so all RX "
        "slots fit in one TX dwell");
  }
  if (snapshot_period_s < num_tx * tx_dwell_s) {
    throw validation_error(
        "SoundingConfig.snapshot_period_s: must be >= num_tx * tx_dwell_s so "
        "all TX dwells fit in one snapshot");
  }
}

arma::vec SoundingConfig::freq_grid_hz() const {
  arma::vec f(num_freq);
  const double center = (static_cast<double>(num_freq) - 1.0) / 2.0;
  for (arma::uword m = 0; m < num_freq; ++m) {
    f(m) = (static_cast<double>(m) - center) * freq_spacing_hz;
  }
  return f;
}

SoundingConfig SoundingConfig::dense_variant() const {
  SoundingConfig dense = *this;
  const double scale = static_cast<double>(num_tx);
  dense.rx_dwell_s /= scale;
  dense.tx_dwell_s /= scale;
  dense.snapshot_period_s /= scale;
  return dense;
}

SwitchMatrix SwitchMatrix::uniform(arma::uword num_tx,
                                   arma::uword num_snapshots) {
  SwitchMatrix s;
  s.entries.set_size(num_tx, num_snapshots);
  for (arma::uword t = 0; t < num_snapshots; ++t) {
    for (arma::uword m = 0; m < num_tx; ++m) s.entries(m, t) = m + 1;
  }
  return s;
}

SwitchMatrix SwitchMatrix::random(arma::uword num_tx,
                                  arma::uword num_snapshots, Rng& rng) {
  SwitchMatrix s = uniform(num_tx, num_snapshots);
  for (arma::uword t = 0; t < num_snapshots; ++t) {
    // Fisher-Yates per column.
    for (arma::uword m = num_tx; m > 1; --m) {
      const arma::uword k = rng.uniform_index(m);
      std::swap(s.entries(m - 1, t), s.entries(k, t));
    }
  }
  return s;
}

void SwitchMatrix::validate() const {
  const arma::uword num_tx = entries.n_rows;
  if (num_tx == 0 || entries.n_cols == 0) {
    throw validation_error("SwitchMatrix.entries: must be non-empty");
  }
  for (arma::uword t = 0; t < entries.n_cols; ++t) {
    std::vector<bool> seen(num_tx, false);
    for (arma::uword m = 0; m < num_tx; ++m) {
      const arma::uword v = entries(m, t);
      if (v < 1 || v > num_tx || seen[v - 1]) {
        throw validation_error(
            "SwitchMatrix.entries: column " + std::to_string(t + 1) +
            " is not a permutation of 1.." + std::to_string(num_tx));
      }
      seen[v - 1] = true;
    }
  }
}

arma::mat eta_from_schedule(const SoundingConfig& config,
                            const SwitchMatrix& schedule) {
  config.validate();
  schedule.validate();
  if (schedule.entries.n_rows != config.num_tx ||
      schedule.entries.n_cols != config.num_snapshots) {
    throw validation_error(
        "eta_from_schedule: schedule shape must be num_tx x num_snapshots");
  }
  const double t1 = config.tx_dwell_s;
  arma::mat eta(config.num_tx, config.num_snapshots);
  for (arma::uword t = 0; t < config.num_snapshots; ++t) {
    // Snapshot t starts at (t-1)*T0; slot s within it starts at (s-1)*t1.
    // Equals the back-to-back form (t-1)*M_T*t1 when the dwells fill the
    // whole snapshot period.
    const double snapshot_offset =
        static_cast<double>(t) * config.snapshot_period_s;
    for (arma::uword m = 0; m < config.num_tx; ++m) {
      eta(m, t) = snapshot_offset +
                  (static_cast<double>(schedule.entries(m, t)) - 1.0) * t1;
    }
  }
  return eta;
}

void validate_paths(const PathSet& paths) {
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const PathParams& path = paths[p];
    if (path.delay_s < 0.0) {
      throw validation_error("PathParams.delay_s: path " + std::to_string(p) +
                             " has negative delay");
    }
    if (!std::isfinite(path.delay_s) || !std::isfinite(path.dod_rad) ||
        !std::isfinite(path.doa_rad) || !std::isfinite(path.doppler_hz) ||
        !std::isfinite(path.weight.real()) ||
        !std::isfinite(path.weight.imag())) {
      throw validation_error("PathParams: path " + std::to_string(p) +
                             " has non-finite parameters");
    }
    for (std::size_t q = 0; q < p; ++q) {
      const PathParams& other = paths[q];
      if (path.delay_s == other.delay_s && path.dod_rad == other.dod_rad &&
          path.doa_rad == other.doa_rad &&
          path.doppler_hz == other.doppler_hz) {
        throw validation_error("PathSet: paths " + std::to_string(q) + " and " +
                               std::to_string(p) +
                               " coincide in (delay, dod, doa, doppler)");
      }
    }
  }
}

SounderSetup::SounderSetup(SoundingConfig config, Eadf tx_array, Eadf rx_array,
                           const SwitchMatrix& schedule)
    : config_(config),
      tx_array_(std::move(tx_array)),
      rx_array_(std::move(rx_array)),
      schedule_(schedule),
      eta_(eta_from_schedule(config, schedule)) {
  if (tx_array_.num_antennas() != config_.num_tx) {
    throw validation_error("SounderSetup: tx_array antenna count " +
                           std::to_string(tx_array_.num_antennas()) +
                           " does not match config.num_tx");
  }
  if (rx_array_.num_antennas() != config_.num_rx) {
    throw validation_error("SounderSetup: rx_array antenna count " +
                           std::to_string(rx_array_.num_antennas()) +
                           " does not match config.num_rx");
  }
}

arma::cx_vec SounderSetup::freq_basis(double delay_s) const {
  const arma::vec f = config_.freq_grid_hz();
  arma::cx_vec b(config_.num_freq);
  for (arma::uword m = 0; m < config_.num_freq; ++m) {
    b(m) = std::polar(1.0, -two_pi * f(m) * delay_s);
  }
  return b;
}

arma::cx_vec SounderSetup::rx_basis(double doa_rad, double doppler_hz) const {
  arma::cx_vec b = rx_array_.steering(doa_rad);
  for (arma::uword m = 0; m < config_.num_rx; ++m) {
    b(m) *= std::polar(1.0, two_pi * doppler_hz *
                                static_cast<double>(m + 1) * config_.rx_dwell_s);
  }
  return b;
}

arma::cx_vec SounderSetup::tx_time_basis(double dod_rad,
                                         double doppler_hz) const {
  const arma::cx_vec steer = tx_array_.steering(dod_rad);
  arma::cx_vec b(config_.num_tx * config_.num_snapshots);
  for (arma::uword t = 0; t < config_.num_snapshots; ++t) {
    for (arma::uword m = 0; m < config_.num_tx; ++m) {
      b(t * config_.num_tx + m) =
          steer(m) * std::polar(1.0, two_pi * doppler_hz * eta_(m, t));
    }
  }
  return b;
}

arma::cx_vec SounderSetup::basis_vector(const PathParams& path) const {
  return arma::kron(
      arma::kron(tx_time_basis(path.dod_rad, path.doppler_hz),
                 rx_basis(path.doa_rad, path.doppler_hz)),
      freq_basis(path.delay_s));
}

arma::cx_mat SounderSetup::basis_matrix(const PathSet& paths) const {
  if (paths.empty()) {
    throw validation_error("basis_matrix: need at least one path");
  }
  arma::cx_mat b(config_.total_samples(), paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    b.col(p) = basis_vector(paths[p]);
  }
  return b;
}

Observation SounderSetup::signal(const PathSet& paths) const {
  Observation obs;
  if (paths.empty()) {
    obs.samples.zeros(config_.total_samples());
    return obs;
  }
  arma::cx_vec gamma(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) gamma(p) = paths[p].weight;
  obs.samples = basis_matrix(paths) * gamma;
  return obs;
}

double doppler_halfwidth_hz(const SoundingConfig& config, bool scrambled_tx) {
  const double base = 1.0 / (2.0 * config.snapshot_period_s);
  return scrambled_tx ? base * static_cast<double>(config.num_tx) : base;
}

}  // namespace soundseq
