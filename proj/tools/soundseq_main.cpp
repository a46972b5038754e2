// soundseq: switching-sequence design and multipath estimation for
// time-multiplexed MIMO channel sounders.
//
// Subcommands: synth-array, optimize-seq, ambiguity-map, simulate, estimate,
// montecarlo, spectrum. Every run writes its outputs plus a manifest.json
// with content hashes into --out-dir; rerunning with --check verifies the
// hashes without recomputation.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <soundseq/harness.hpp>
#include <soundseq/io.hpp>
#include <soundseq/seqopt.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace soundseq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 1729;  // fixed, never wall-clock

struct CommonOpts {
  std::string out_dir = "soundseq_run";
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  bool check = false;
};

struct ScenarioChoice {
  std::string file;
  std::string builtin = "high-doppler";
  std::string schedule_override;  // "", "uniform", "dense" or a file path
};

ScenarioSpec builtin_scenario(const std::string& name) {
  if (name == "high-doppler") return single_path_high_doppler_spec();
  if (name == "low-doppler") return single_path_low_doppler_spec();
  if (name == "two-path") return two_path_spec();
  if (name == "base") return base_scenario_spec();
  throw validation_error("--builtin: unknown scenario \"" + name +
                         "\" (expected high-doppler, low-doppler, two-path "
                         "or base)");
}

Scenario load_choice(const ScenarioChoice& choice,
                     std::map<std::string, std::string>& input_hashes) {
  Scenario scenario;
  if (!choice.file.empty()) {
    scenario = load_scenario(choice.file);
    input_hashes["scenario"] = hash_file(choice.file);
  } else {
    scenario = resolve_scenario(builtin_scenario(choice.builtin), ".");
  }
  if (choice.schedule_override.empty()) return scenario;
  if (choice.schedule_override == "uniform") {
    scenario.schedule = SwitchMatrix::uniform(scenario.config.num_tx,
                                              scenario.config.num_snapshots);
  } else if (choice.schedule_override == "dense") {
    scenario.config = scenario.config.dense_variant();
    scenario.schedule = SwitchMatrix::uniform(scenario.config.num_tx,
                                              scenario.config.num_snapshots);
  } else {
    scenario.schedule = read_switch_file(choice.schedule_override);
    input_hashes["schedule"] = hash_file(choice.schedule_override);
  }
  return scenario;
}

void add_scenario_options(CLI::App* cmd, ScenarioChoice& choice) {
  cmd->add_option("--scenario", choice.file,
                  "Scenario file (scenario-v1 JSON)");
  cmd->add_option("--builtin", choice.builtin,
                  "Bundled scenario when no file is given: high-doppler, "
                  "low-doppler, two-path or base")
      ->capture_default_str();
  cmd->add_option(
      "--schedule", choice.schedule_override,
      "TX schedule override: 'uniform', 'dense' (uniform at 1/M_T timing) or "
      "a switch-v1 file");
}

int run_synth_array(const CommonOpts& common, const std::string& type,
                    unsigned antennas, double radius, unsigned max_mode,
                    double perturb) {
  Eadf eadf = type == "phase-mode"
                  ? synthesize_phase_mode_uca(antennas)
                  : (perturb != 0.0
                         ? synthesize_uca(antennas, radius, max_mode, perturb,
                                          common.seed)
                         : synthesize_uca(antennas, radius, max_mode));
  const fs::path dir(common.out_dir);
  write_eadf_file(dir / "array.json", eadf);
  json params{{"type", type},
              {"antennas", antennas},
              {"radius_wavelengths", radius},
              {"max_mode", max_mode},
              {"perturbation", perturb}};
  write_run_manifest(dir, "synth-array", common.seed, params.dump(),
                     {"array.json"}, {});
  std::cout << "wrote " << (dir / "array.json").string() << "\n";
  return 0;
}

int run_optimize_seq(const CommonOpts& common, const ScenarioChoice& choice,
                     const AnnealParams& params_in, unsigned grid_phi,
                     unsigned grid_nu, unsigned chains) {
  std::map<std::string, std::string> inputs;
  const Scenario scenario = load_choice(choice, inputs);
  const SoundingConfig& cfg = scenario.config;
  const AmbiguityGridSpec grid =
      AmbiguityGridSpec::make(cfg, grid_phi, grid_phi, grid_nu);
  AnnealParams params = params_in;
  params.seed = common.seed;
  const AnnealResult result =
      chains > 1
          ? anneal_ensemble(scenario.tx_array, cfg, grid, params, chains,
                            common.jobs)
          : anneal(scenario.tx_array, cfg, grid, params);

  const TxAmbiguityMap map(scenario.tx_array, cfg, grid);
  const arma::mat eta_best = eta_from_schedule(cfg, result.best);
  const arma::mat eta_uniform = eta_from_schedule(
      cfg, SwitchMatrix::uniform(cfg.num_tx, cfg.num_snapshots));
  const NslResult nsl_best = map.nsl(eta_best);
  const NslResult nsl_uniform = map.nsl(eta_uniform);

  const fs::path dir(common.out_dir);
  write_switch_file(dir / "schedule.json", result.best);
  write_anneal_trace_csv(dir / "trace.csv", result.trace);
  {
    std::ofstream out(dir / "nsl.txt", std::ios::binary | std::ios::trunc);
    out << "best_f" << params.p << ": " << result.best_cost << "\n"
        << "uniform_f" << params.p << ": "
        << map.cost_f_p(eta_uniform, params.p) << "\n"
        << "nsl_db: " << nsl_best.nsl_db << "\n"
        << "nsl_uniform_db: " << nsl_uniform.nsl_db << "\n"
        << "main_lobe_clipped: " << (nsl_best.main_lobe_clipped ? 1 : 0)
        << "\n";
  }
  json params_json{{"p", params.p},           {"temp0", params.temp0},
                   {"alpha", params.alpha},   {"k_max", params.k_max},
                   {"eps_th", params.eps_th}, {"grid_phi", grid_phi},
                   {"grid_nu", grid_nu},       {"chains", chains}};
  write_run_manifest(dir, "optimize-seq", common.seed, params_json.dump(),
                     {"schedule.json", "trace.csv", "nsl.txt"}, inputs);
  std::cout << "best f" << params.p << " = " << result.best_cost
            << ", NSL = " << nsl_best.nsl_db << " dB (uniform "
            << nsl_uniform.nsl_db << " dB)\n";
  return 0;
}

int run_ambiguity_map(const CommonOpts& common, const ScenarioChoice& choice,
                      double ref_dod_deg, unsigned grid_phi,
                      unsigned grid_nu) {
  std::map<std::string, std::string> inputs;
  const Scenario scenario = load_choice(choice, inputs);
  const AmbiguityGridSpec grid =
      AmbiguityGridSpec::make(scenario.config, grid_phi, grid_phi, grid_nu);
  const TxAmbiguityMap map(scenario.tx_array, scenario.config, grid);
  const arma::uword ref = arma::index_min(
      arma::abs(grid.phi - wrap_angle(deg_to_rad(ref_dod_deg))));
  const arma::mat amp = map.amplitude_map(
      eta_from_schedule(scenario.config, scenario.schedule), ref);
  const fs::path dir(common.out_dir);
  write_ambiguity_map_csv(dir / "map.csv", grid.phi(ref), grid.phi_prime,
                          grid.delta_nu, amp);
  json params{{"ref_dod_deg", ref_dod_deg},
              {"grid_phi", grid_phi},
              {"grid_nu", grid_nu}};
  write_run_manifest(dir, "ambiguity-map", common.seed, params.dump(),
                     {"map.csv"}, inputs);
  std::cout << "wrote " << (dir / "map.csv").string() << "\n";
  return 0;
}

int run_simulate(const CommonOpts& common, const ScenarioChoice& choice,
                 double snr_db, bool have_snr, bool noiseless) {
  std::map<std::string, std::string> inputs;
  const Scenario scenario = load_choice(choice, inputs);
  const SounderSetup setup = make_setup(scenario);
  PathSet paths = scenario.paths;
  if (have_snr) {
    const double rho_total =
        db_to_linear(snr_db) *
        static_cast<double>(setup.config().total_samples());
    paths = scale_to_snr(setup, paths, scenario.noise, rho_total);
  }
  Observation obs;
  if (noiseless) {
    obs = setup.signal(paths);
  } else {
    Rng rng(common.seed);
    obs = synth(setup, paths, scenario.noise, rng);
  }
  const fs::path dir(common.out_dir);
  write_observation_file(dir / "observation.json", obs, setup.config());
  json params{{"snr_db_per_sample", have_snr ? json(snr_db) : json()},
              {"noiseless", noiseless}};
  write_run_manifest(dir, "simulate", common.seed, params.dump(),
                     {"observation.json"}, inputs);
  std::cout << "wrote " << (dir / "observation.json").string() << "\n";
  return 0;
}

int run_estimate(const CommonOpts& common, const ScenarioChoice& choice,
                 const std::string& observation_file, double threshold_db,
                 unsigned max_paths) {
  std::map<std::string, std::string> inputs;
  const Scenario scenario = load_choice(choice, inputs);
  const SounderSetup setup = make_setup(scenario);
  const Observation obs =
      read_observation_file(observation_file, &scenario.config);
  inputs["observation"] = hash_file(observation_file);

  DetectSettings detect;
  detect.threshold_db = threshold_db;
  detect.max_paths = max_paths;
  const EstimationResult result =
      estimate(setup, obs, SearchGrid::defaults(scenario.config), detect);

  const fs::path dir(common.out_dir);
  write_estimation_file(dir / "estimate.txt", result);
  write_lm_trace_csv(dir / "lm_trace.csv", result.trace);
  json params{{"threshold_db", threshold_db}, {"max_paths", max_paths}};
  write_run_manifest(dir, "estimate", common.seed, params.dump(),
                     {"estimate.txt", "lm_trace.csv"}, inputs);
  std::cout << "estimated " << result.paths.size()
            << " path(s), sigma2_hat = " << result.sigma2_hat
            << (result.diverged ? " (diverged)" : "") << "\n";
  return 0;
}

int run_montecarlo(const CommonOpts& common, const ScenarioChoice& choice,
                   std::vector<double> snr_db, unsigned trials,
                   bool threshold_order) {
  std::map<std::string, std::string> inputs;
  ExperimentSpec spec;
  spec.scenario = load_choice(choice, inputs);
  spec.snr_db = std::move(snr_db);
  spec.trials = trials;
  spec.base_seed = common.seed;
  spec.known_path_count = !threshold_order;
  spec.jobs = common.jobs;
  const RmseTable table = monte_carlo(spec);

  const fs::path dir(common.out_dir);
  write_rmse_csv(dir / "rmse.csv", table);
  json divergent;
  for (const auto& [snr, count] : table.divergent) {
    divergent[std::to_string(snr)] = count;
  }
  json params{{"snr_db_per_sample", spec.snr_db},
              {"trials", trials},
              {"known_path_count", spec.known_path_count},
              {"divergent", divergent}};
  write_run_manifest(dir, "montecarlo", common.seed, params.dump(),
                     {"rmse.csv"}, inputs);
  std::cout << "wrote " << (dir / "rmse.csv").string() << "\n";
  return 0;
}

int run_spectrum(const CommonOpts& common, const ScenarioChoice& choice,
                 const std::string& observation_file, unsigned delay_bins,
                 unsigned doppler_bins, unsigned angle_density, double snr_db,
                 bool have_snr) {
  std::map<std::string, std::string> inputs;
  const Scenario scenario = load_choice(choice, inputs);
  const SounderSetup setup = make_setup(scenario);
  Observation obs;
  if (!observation_file.empty()) {
    obs = read_observation_file(observation_file, &scenario.config);
    inputs["observation"] = hash_file(observation_file);
  } else {
    PathSet paths = scenario.paths;
    if (have_snr) {
      const double rho_total =
          db_to_linear(snr_db) *
          static_cast<double>(setup.config().total_samples());
      paths = scale_to_snr(setup, paths, scenario.noise, rho_total);
    }
    obs = setup.signal(paths);  // noiseless reference spectrum
  }
  const SoundingConfig& cfg = scenario.config;
  arma::vec delays(delay_bins);
  for (arma::uword i = 0; i < delay_bins; ++i) {
    delays(i) = static_cast<double>(i) / (delay_bins * cfg.freq_spacing_hz);
  }
  const double half = doppler_halfwidth_hz(cfg, /*scrambled_tx=*/true);
  const arma::vec dopplers = arma::linspace(-half, half, doppler_bins);
  const arma::mat power =
      delay_doppler_spectrum(setup, obs, delays, dopplers, angle_density);

  const fs::path dir(common.out_dir);
  write_spectrum_csv(dir / "spectrum.csv", delays, dopplers, power);
  json params{{"delay_bins", delay_bins},
              {"doppler_bins", doppler_bins},
              {"angle_density", angle_density}};
  write_run_manifest(dir, "spectrum", common.seed, params.dump(),
                     {"spectrum.csv"}, inputs);
  std::cout << "wrote " << (dir / "spectrum.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "soundseq: TX switching-sequence design and maximum-likelihood "
      "multipath estimation for TDM MIMO channel sounders"};
  app.require_subcommand(0, 1);

  CommonOpts common;
  app.add_option("--out-dir", common.out_dir,
                 "Run directory for outputs and manifest.json")
      ->capture_default_str();
  app.add_option("--seed", common.seed,
                 "Deterministic RNG seed (fixed default, never wall-clock)")
      ->capture_default_str();
  app.add_option("--jobs", common.jobs, "Worker parallelism cap")
      ->capture_default_str();
  app.add_flag("--check", common.check,
               "Verify the manifest hashes in --out-dir and exit");

  // synth-array
  auto* synth_cmd =
      app.add_subcommand("synth-array", "Synthesize an array EADF file");
  std::string array_type = "phase-mode";
  unsigned antennas = 8, max_mode = 20;
  double radius = 0.5, perturb = 0.0;
  synth_cmd->add_option("--type", array_type, "Array model: phase-mode or uca")
      ->capture_default_str();
  synth_cmd->add_option("--antennas", antennas, "Element count")
      ->capture_default_str();
  synth_cmd->add_option("--radius", radius, "UCA radius in wavelengths")
      ->capture_default_str();
  synth_cmd->add_option("--max-mode", max_mode, "EADF mode truncation")
      ->capture_default_str();
  synth_cmd->add_option("--perturb", perturb,
                        "Seeded per-antenna complex gain perturbation");

  // optimize-seq
  auto* opt_cmd = app.add_subcommand(
      "optimize-seq", "Anneal a TX switching schedule minimizing f_p");
  ScenarioChoice opt_choice;
  opt_choice.builtin = "base";
  add_scenario_options(opt_cmd, opt_choice);
  AnnealParams anneal_params;
  unsigned opt_grid_phi = 72, opt_grid_nu = 0;
  opt_cmd->add_option("--p", anneal_params.p, "Cost exponent")
      ->capture_default_str();
  opt_cmd->add_option("--temp0", anneal_params.temp0, "Initial temperature")
      ->capture_default_str();
  opt_cmd->add_option("--alpha", anneal_params.alpha, "Cooling rate in (0,1)")
      ->capture_default_str();
  opt_cmd->add_option("--kmax", anneal_params.k_max, "Iteration budget")
      ->capture_default_str();
  opt_cmd->add_option("--eps-th", anneal_params.eps_th,
                      "Early-stop cost threshold")
      ->capture_default_str();
  opt_cmd->add_option("--grid-phi", opt_grid_phi, "Angle grid points")
      ->capture_default_str();
  opt_cmd->add_option("--grid-nu", opt_grid_nu,
                      "Doppler grid points (default 16*M_T+1)");
  unsigned opt_chains = 1;
  opt_cmd->add_option("--chains", opt_chains,
                      "Independent annealing chains merged by min cost")
      ->capture_default_str();

  // ambiguity-map
  auto* map_cmd = app.add_subcommand(
      "ambiguity-map", "Export |X_T| over (DoD', delta-Doppler) as CSV");
  ScenarioChoice map_choice;
  map_choice.builtin = "base";
  add_scenario_options(map_cmd, map_choice);
  double ref_dod_deg = 0.0;
  unsigned map_grid_phi = 72, map_grid_nu = 0;
  map_cmd->add_option("--ref-dod-deg", ref_dod_deg,
                      "Reference departure angle")
      ->capture_default_str();
  map_cmd->add_option("--grid-phi", map_grid_phi, "Angle grid points")
      ->capture_default_str();
  map_cmd->add_option("--grid-nu", map_grid_nu,
                      "Doppler grid points (default 16*M_T+1)");

  // simulate
  auto* sim_cmd =
      app.add_subcommand("simulate", "Synthesize an observation for a scenario");
  ScenarioChoice sim_choice;
  add_scenario_options(sim_cmd, sim_choice);
  double sim_snr_db = 0.0;
  bool sim_noiseless = false;
  auto* sim_snr_opt = sim_cmd->add_option(
      "--snr-db", sim_snr_db, "Per-sample SNR target (scales path weights)");
  sim_cmd->add_flag("--noiseless", sim_noiseless, "Skip the noise term");

  // estimate
  auto* est_cmd = app.add_subcommand(
      "estimate", "Run the multipath estimator on an observation");
  ScenarioChoice est_choice;
  add_scenario_options(est_cmd, est_choice);
  std::string est_observation;
  double est_threshold_db = 13.0;
  unsigned est_max_paths = 10;
  est_cmd->add_option("--observation", est_observation, "obs-v1 file")
      ->required();
  est_cmd->add_option("--threshold-db", est_threshold_db,
                      "Detection threshold over the per-bin noise floor")
      ->capture_default_str();
  est_cmd->add_option("--max-paths", est_max_paths, "Detection cap")
      ->capture_default_str();

  // montecarlo
  auto* mc_cmd =
      app.add_subcommand("montecarlo", "RMSE vs CRLB sweep over SNR");
  ScenarioChoice mc_choice;
  add_scenario_options(mc_cmd, mc_choice);
  std::vector<double> mc_snr_db{10.0, 20.0, 30.0};
  unsigned mc_trials = 100;
  bool mc_threshold_order = false;
  mc_cmd->add_option("--snr-db", mc_snr_db, "Per-sample SNR list in dB")
      ->capture_default_str();
  mc_cmd->add_option("--trials", mc_trials, "Trials per SNR")
      ->capture_default_str();
  mc_cmd->add_flag("--threshold-order", mc_threshold_order,
                   "Use thresholded detection instead of the known path count");

  // spectrum
  auto* spec_cmd = app.add_subcommand(
      "spectrum", "Delay-Doppler spectrum of an observation");
  ScenarioChoice spec_choice;
  add_scenario_options(spec_cmd, spec_choice);
  std::string spec_observation;
  unsigned delay_bins = 128, doppler_bins = 257, angle_density = 48;
  double spec_snr_db = 0.0;
  spec_cmd->add_option("--observation", spec_observation,
                       "obs-v1 file (default: noiseless scenario signal)");
  auto* spec_snr_opt = spec_cmd->add_option(
      "--snr-db", spec_snr_db, "Per-sample SNR used when synthesizing");
  spec_cmd->add_option("--delay-bins", delay_bins, "Delay grid size")
      ->capture_default_str();
  spec_cmd->add_option("--doppler-bins", doppler_bins, "Doppler grid size")
      ->capture_default_str();
  spec_cmd->add_option("--angle-density", angle_density,
                       "Angle grid size per direction")
      ->capture_default_str();

  // Global options may follow the subcommand name.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) {
         return true;
       })) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (common.check) {
      std::string detail;
      if (check_run_directory(common.out_dir, &detail)) {
        std::cout << "manifest ok: " << common.out_dir << "\n";
        return 0;
      }
      std::cerr << "manifest check failed:\n" << detail;
      return 1;
    }
    if (synth_cmd->parsed()) {
      if (array_type != "phase-mode" && array_type != "uca") {
        throw validation_error("--type: expected phase-mode or uca, got " +
                               array_type);
      }
      return run_synth_array(common, array_type, antennas, radius, max_mode,
                             perturb);
    }
    if (opt_cmd->parsed()) {
      std::map<std::string, std::string> probe_inputs;
      const Scenario probe = load_choice(opt_choice, probe_inputs);
      return run_optimize_seq(
          common, opt_choice, anneal_params, opt_grid_phi,
          opt_grid_nu != 0 ? opt_grid_nu : 16 * probe.config.num_tx + 1,
          opt_chains);
    }
    if (map_cmd->parsed()) {
      std::map<std::string, std::string> probe_inputs;
      const Scenario probe = load_choice(map_choice, probe_inputs);
      return run_ambiguity_map(
          common, map_choice, ref_dod_deg, map_grid_phi,
          map_grid_nu != 0 ? map_grid_nu : 16 * probe.config.num_tx + 1);
    }
    if (sim_cmd->parsed()) {
      return run_simulate(common, sim_choice, sim_snr_db,
                          sim_snr_opt->count() > 0, sim_noiseless);
    }
    if (est_cmd->parsed()) {
      return run_estimate(common, est_choice, est_observation,
                          est_threshold_db, est_max_paths);
    }
    if (mc_cmd->parsed()) {
      return run_montecarlo(common, mc_choice, mc_snr_db, mc_trials,
                            mc_threshold_order);
    }
    if (spec_cmd->parsed()) {
      return run_spectrum(common, spec_choice, spec_observation, delay_bins,
                          doppler_bins, angle_density, spec_snr_db,
                          spec_snr_opt->count() > 0);
    }
    std::cerr << app.help();
    return 1;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}
