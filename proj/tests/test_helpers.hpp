#pragma once

#include <soundseq/harness.hpp>
#include <soundseq/io.hpp>
#include <soundseq/rng.hpp>

namespace soundseq::test {

// 8x8 phase-mode setup, 64 tones over 15 MHz, 620 us snapshot period, T = 3.
inline SoundingConfig default_config() {
  SoundingConfig cfg;
  cfg.num_freq = 64;
  cfg.freq_spacing_hz = 234375.0;
  cfg.num_rx = 8;
  cfg.num_tx = 8;
  cfg.num_snapshots = 3;
  cfg.snapshot_period_s = 620e-6;
  cfg.tx_dwell_s = cfg.snapshot_period_s * 0.11875;
  cfg.rx_dwell_s = cfg.snapshot_period_s / 512.0;
  return cfg;
}

inline SounderSetup default_setup(const SwitchMatrix& schedule) {
  return SounderSetup(default_config(), synthesize_phase_mode_uca(8),
                      synthesize_phase_mode_uca(8), schedule);
}

inline SounderSetup default_uniform_setup() {
  return default_setup(SwitchMatrix::uniform(8, 3));
}

// Tiny configuration for tests that sweep dense grids.
inline SoundingConfig small_config() {
  SoundingConfig cfg;
  cfg.num_freq = 4;
  cfg.freq_spacing_hz = 1e6;
  cfg.num_rx = 2;
  cfg.num_tx = 3;
  cfg.num_snapshots = 2;
  cfg.rx_dwell_s = 2e-6;
  cfg.tx_dwell_s = 5e-6;
  cfg.snapshot_period_s = 20e-6;
  return cfg;
}

inline SounderSetup small_setup(std::uint64_t schedule_seed = 0) {
  const SoundingConfig cfg = small_config();
  SwitchMatrix schedule;
  if (schedule_seed == 0) {
    schedule = SwitchMatrix::uniform(cfg.num_tx, cfg.num_snapshots);
  } else {
    Rng rng(schedule_seed);
    schedule = SwitchMatrix::random(cfg.num_tx, cfg.num_snapshots, rng);
  }
  return SounderSetup(cfg, synthesize_phase_mode_uca(cfg.num_tx),
                      synthesize_phase_mode_uca(cfg.num_rx), schedule);
}

inline PathParams random_path(Rng& rng, const SoundingConfig& cfg) {
  PathParams p;
  p.delay_s = rng.uniform() * 0.8 / cfg.freq_spacing_hz;
  p.dod_rad = wrap_angle(rng.uniform() * two_pi - pi);
  p.doa_rad = wrap_angle(rng.uniform() * two_pi - pi);
  p.doppler_hz = (rng.uniform() - 0.5) *
                 static_cast<double>(cfg.num_tx) / cfg.snapshot_period_s;
  p.weight = std::polar(0.5 + rng.uniform(), rng.uniform() * two_pi - pi);
  return p;
}

}  // namespace soundseq::test
