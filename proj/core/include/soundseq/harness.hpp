#pragma once

#include <map>
#include <string>
#include <vector>

#include "soundseq/io.hpp"

namespace soundseq {

// Monte-Carlo experiment over a scenario. SNR values are per-sample dB; the
// path weights are scaled per trial so that ||s||^2 / sigma2 equals
// 10^(snr_db/10) * M (see README, "SNR convention").
struct ExperimentSpec {
  Scenario scenario;
  std::vector<double> snr_db;
  arma::uword trials = 100;
  std::uint64_t base_seed = 1729;
  // Extract exactly as many paths as the scenario holds (known model order);
  // when false the thresholded detection decides.
  bool known_path_count = true;
  DetectSettings detect;
  LmSettings lm;
  arma::uword jobs = 1;

  void validate() const;
};

struct RmseRow {
  double snr_db = 0.0;
  std::string param;  // e.g. "tau_ns"; "p2.tau_ns" for multi-path scenarios
  double rmse = 0.0;
  double sqrt_crlb = 0.0;
  arma::uword n_trials = 0;    // trials entering the RMSE
  arma::uword n_outliers = 0;  // |Doppler error| > M_T/(4*T0), still included
};

struct RmseTable {
  std::vector<RmseRow> rows;
  std::map<double, arma::uword> divergent;  // per SNR: excluded trials
};

// Per trial: scale weights to the target SNR, synthesize an observation with
// seed base_seed + trial, run the full estimation pipeline and record raw
// per-parameter errors (Doppler errors unwrapped so aliasing stays visible).
// The CRLB is evaluated once per SNR at the scaled truth. Trials whose
// estimate diverged or missed a path are counted per SNR and excluded from
// the RMSE.
RmseTable monte_carlo(const ExperimentSpec& spec);

// spectrum(tau, nu) = max over a coarse (dod, doa) grid of |b^H y|^2/||b||^2,
// evaluated on the given delay and Doppler grids.
arma::mat delay_doppler_spectrum(const SounderSetup& setup,
                                 const Observation& obs,
                                 const arma::vec& delay_s,
                                 const arma::vec& doppler_hz,
                                 arma::uword angle_density);

void write_rmse_csv(const std::filesystem::path& path, const RmseTable& table);

// Bundled scenarios used by the experiments and the CLI defaults: an
// 8x8 phase-mode setup at 15 MHz bandwidth with 620 us snapshot period.
ScenarioSpec base_scenario_spec();
// Single path with Doppler far beyond the sequential-switching alias limit.
ScenarioSpec single_path_high_doppler_spec();
// Single path with Doppler well inside the alias-free range.
ScenarioSpec single_path_low_doppler_spec();
// Two close-Doppler paths at different delays/angles and powers.
ScenarioSpec two_path_spec();

}  // namespace soundseq
