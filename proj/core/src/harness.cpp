#include "soundseq/harness.hpp"

#include <fstream>
#include <future>
#include <sstream>

namespace soundseq {

void ExperimentSpec::validate() const {
  scenario.config.validate();
  if (snr_db.empty()) {
    throw validation_error("ExperimentSpec.snr_db: must be non-empty");
  }
  if (trials < 1) {
    throw validation_error("ExperimentSpec.trials: must be >= 1");
  }
  if (scenario.paths.empty()) {
    throw validation_error("ExperimentSpec.scenario: needs at least one path");
  }
  if (jobs < 1) {
    throw validation_error("ExperimentSpec.jobs: must be >= 1");
  }
}

namespace {

struct TrialOutcome {
  bool divergent = false;
  // 4 entries per true path: delay (s), dod (rad), doa (rad), doppler (Hz).
  arma::vec errors;
};

double angle_diff(double a, double b) { return wrap_angle(a - b); }

// Greedy matching of estimates to true paths, strongest truth first.
std::vector<arma::sword> match_paths(const PathSet& truth,
                                     const PathSet& estimates,
                                     double delay_scale, double doppler_scale) {
  std::vector<std::size_t> order(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::norm(truth[a].weight) > std::norm(truth[b].weight);
  });
  std::vector<arma::sword> match(truth.size(), -1);
  std::vector<bool> used(estimates.size(), false);
  for (std::size_t idx : order) {
    double best = std::numeric_limits<double>::infinity();
    arma::sword best_e = -1;
    for (std::size_t e = 0; e < estimates.size(); ++e) {
      if (used[e]) continue;
      const double d_tau =
          (estimates[e].delay_s - truth[idx].delay_s) / delay_scale;
      const double d_dod = angle_diff(estimates[e].dod_rad, truth[idx].dod_rad);
      const double d_doa = angle_diff(estimates[e].doa_rad, truth[idx].doa_rad);
      const double d_nu =
          (estimates[e].doppler_hz - truth[idx].doppler_hz) / doppler_scale;
      const double dist =
          d_tau * d_tau + d_dod * d_dod + d_doa * d_doa + d_nu * d_nu;
      if (dist < best) {
        best = dist;
        best_e = static_cast<arma::sword>(e);
      }
    }
    if (best_e >= 0) {
      used[static_cast<std::size_t>(best_e)] = true;
      match[idx] = best_e;
    }
  }
  return match;
}

TrialOutcome run_trial(const SounderSetup& setup, const Scenario& scenario,
                       const PathSet& scaled_truth, const SearchGrid& grid,
                       const DetectSettings& detect, const LmSettings& lm,
                       std::uint64_t seed) {
  TrialOutcome outcome;
  Rng rng(seed);
  const Observation obs = synth(setup, scaled_truth, scenario.noise, rng);
  const EstimationResult est = estimate(setup, obs, grid, detect, lm);
  if (est.diverged || est.paths.size() < scaled_truth.size()) {
    outcome.divergent = true;
    return outcome;
  }
  const SoundingConfig& cfg = setup.config();
  const double delay_scale =
      1.0 / (static_cast<double>(cfg.num_freq) * cfg.freq_spacing_hz);
  const double doppler_scale =
      1.0 / (static_cast<double>(cfg.num_snapshots) * cfg.snapshot_period_s);
  const std::vector<arma::sword> match =
      match_paths(scaled_truth, est.paths, delay_scale, doppler_scale);
  outcome.errors.set_size(4 * scaled_truth.size());
  for (std::size_t p = 0; p < scaled_truth.size(); ++p) {
    if (match[p] < 0) {
      outcome.divergent = true;
      return outcome;
    }
    const PathParams& est_p = est.paths[static_cast<std::size_t>(match[p])];
    outcome.errors(4 * p + 0) = est_p.delay_s - scaled_truth[p].delay_s;
    outcome.errors(4 * p + 1) =
        angle_diff(est_p.dod_rad, scaled_truth[p].dod_rad);
    outcome.errors(4 * p + 2) =
        angle_diff(est_p.doa_rad, scaled_truth[p].doa_rad);
    // Raw Doppler error, not reduced modulo the alias period.
    outcome.errors(4 * p + 3) =
        est_p.doppler_hz - scaled_truth[p].doppler_hz;
  }
  return outcome;
}

}  // namespace

RmseTable monte_carlo(const ExperimentSpec& spec) {
  spec.validate();
  const SounderSetup setup = make_setup(spec.scenario);
  const SearchGrid grid = SearchGrid::defaults(spec.scenario.config);
  const arma::uword total = spec.scenario.config.total_samples();
  const double outlier_bound =
      static_cast<double>(spec.scenario.config.num_tx) /
      (4.0 * spec.scenario.config.snapshot_period_s);

  DetectSettings detect = spec.detect;
  if (spec.known_path_count) {
    detect.fixed_path_count = spec.scenario.paths.size();
  }

  RmseTable table;
  const std::size_t n_paths = spec.scenario.paths.size();
  const char* param_names[4] = {"tau_ns", "phi_t_deg", "phi_r_deg", "nu_hz"};
  const double unit_scale[4] = {1e9, 180.0 / pi, 180.0 / pi, 1.0};

  for (double snr_db : spec.snr_db) {
    const double rho_total =
        db_to_linear(snr_db) * static_cast<double>(total);
    const PathSet scaled_truth = scale_to_snr(setup, spec.scenario.paths,
                                              spec.scenario.noise, rho_total);
    const arma::vec crlb_std =
        crlb(setup, scaled_truth, spec.scenario.noise.sigma2);

    std::vector<TrialOutcome> outcomes(spec.trials);
    const arma::uword workers = std::min<arma::uword>(spec.jobs, spec.trials);
    if (workers <= 1) {
      for (arma::uword i = 0; i < spec.trials; ++i) {
        outcomes[i] = run_trial(setup, spec.scenario, scaled_truth, grid,
                                detect, spec.lm, spec.base_seed + i);
      }
    } else {
      std::vector<std::future<void>> futures;
      futures.reserve(workers);
      for (arma::uword w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
          for (arma::uword i = w; i < spec.trials; i += workers) {
            outcomes[i] = run_trial(setup, spec.scenario, scaled_truth, grid,
                                    detect, spec.lm, spec.base_seed + i);
          }
        }));
      }
      for (auto& f : futures) f.get();
    }

    arma::uword divergent = 0;
    std::vector<std::vector<double>> sq_errors(4 * n_paths);
    std::vector<arma::uword> outliers(n_paths, 0);
    for (arma::uword i = 0; i < spec.trials; ++i) {
      if (outcomes[i].divergent) {
        ++divergent;
        continue;
      }
      for (std::size_t p = 0; p < n_paths; ++p) {
        if (std::abs(outcomes[i].errors(4 * p + 3)) > outlier_bound) {
          ++outliers[p];
        }
        for (std::size_t c = 0; c < 4; ++c) {
          const double err = outcomes[i].errors(4 * p + c);
          sq_errors[4 * p + c].push_back(err * err);
        }
      }
    }
    table.divergent[snr_db] = divergent;

    for (std::size_t p = 0; p < n_paths; ++p) {
      for (std::size_t c = 0; c < 4; ++c) {
        RmseRow row;
        row.snr_db = snr_db;
        row.param = n_paths == 1 ? param_names[c]
                                 : "p" + std::to_string(p + 1) + "." +
                                       param_names[c];
        const std::vector<double>& sq = sq_errors[4 * p + c];
        row.n_trials = sq.size();
        row.n_outliers = outliers[p];
        row.rmse = sq.empty()
                       ? 0.0
                       : std::sqrt(pairwise_sum(sq) / sq.size()) *
                             unit_scale[c];
        row.sqrt_crlb = crlb_std(6 * p + c) * unit_scale[c];
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

arma::mat delay_doppler_spectrum(const SounderSetup& setup,
                                 const Observation& obs,
                                 const arma::vec& delay_s,
                                 const arma::vec& doppler_hz,
                                 arma::uword angle_density) {
  if (angle_density < 1) {
    throw validation_error(
        "delay_doppler_spectrum: angle_density must be >= 1");
  }
  SearchGrid grid;
  grid.delay_s = delay_s;
  grid.doppler_hz = doppler_hz;
  grid.doa_rad.set_size(angle_density);
  grid.dod_rad.set_size(angle_density);
  for (arma::uword i = 0; i < angle_density; ++i) {
    const double phi =
        -pi + (static_cast<double>(i) + 1.0) * two_pi / angle_density;
    grid.doa_rad(i) = phi;
    grid.dod_rad(i) = phi;
  }
  // sigma2 = 1 turns the correlation into |b^H y|^2 / ||b||^2.
  const Tensor4 c = correlation_grid_tensor(setup, obs, grid, 1.0);
  arma::mat out(delay_s.n_elem, doppler_hz.n_elem, arma::fill::zeros);
  for (arma::uword l = 0; l < doppler_hz.n_elem; ++l) {
    for (arma::uword k = 0; k < angle_density; ++k) {
      for (arma::uword j = 0; j < angle_density; ++j) {
        for (arma::uword i = 0; i < delay_s.n_elem; ++i) {
          out(i, l) = std::max(out(i, l), c.values(c.flat(i, j, k, l)));
        }
      }
    }
  }
  return out;
}

void write_rmse_csv(const std::filesystem::path& path,
                    const RmseTable& table) {
  std::ostringstream out;
  out << "snr_db,param,rmse,sqrt_crlb,n_trials,n_outliers\n";
  for (const RmseRow& r : table.rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g,%.17g,", r.snr_db,
                  r.param.c_str(), r.rmse, r.sqrt_crlb);
    out << buf << r.n_trials << ',' << r.n_outliers << '\n';
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw validation_error("cannot write file: " + path.string());
  }
  file << out.str();
}

namespace {

ScenarioSpec scenario_skeleton() {
  ScenarioSpec spec;
  spec.config.num_freq = 64;
  spec.config.freq_spacing_hz = 234375.0;  // 15 MHz over 64 tones
  spec.config.num_rx = 8;
  spec.config.num_tx = 8;
  spec.config.num_snapshots = 3;
  spec.config.snapshot_period_s = 620e-6;
  spec.config.tx_dwell_s = spec.config.snapshot_period_s * 0.11875;
  spec.config.rx_dwell_s = spec.config.snapshot_period_s / 512.0;
  spec.tx_array.type = "phase_mode_uca";
  spec.tx_array.num_antennas = 8;
  spec.rx_array.type = "phase_mode_uca";
  spec.rx_array.num_antennas = 8;
  spec.schedule.type = "uniform";
  spec.noise_sigma2 = 1.0;
  return spec;
}

}  // namespace

ScenarioSpec base_scenario_spec() { return scenario_skeleton(); }

ScenarioSpec single_path_high_doppler_spec() {
  ScenarioSpec spec = scenario_skeleton();
  spec.paths.push_back({601.1, 11.5, 59.6, 4032.3, 0.0, 0.0});
  return spec;
}

ScenarioSpec single_path_low_doppler_spec() {
  ScenarioSpec spec = scenario_skeleton();
  spec.paths.push_back({1117.3, 21.3, 160.0, 80.6, 0.0, 0.0});
  return spec;
}

ScenarioSpec two_path_spec() {
  ScenarioSpec spec = scenario_skeleton();
  spec.paths.push_back({646.2, 67.81, -59.33, 3225.8, -13.13, 0.0});
  spec.paths.push_back({1203.7, -60.15, -123.79, 3217.7, -18.82, 0.0});
  return spec;
}

}  // namespace soundseq
