#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "soundseq/hrpe.hpp"
#include "soundseq/seqopt.hpp"
#include "soundseq/simulate.hpp"

namespace soundseq {

// ---- content hashing -------------------------------------------------------

// FNV-1a 64-bit over raw bytes, rendered as "fnv1a64:<hex>". Used to
// content-address inputs and outputs in run manifests.
std::string fnv1a64_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);
std::string config_hash(const SoundingConfig& config);

// ---- array files (eadf-v1) -------------------------------------------------
// JSON document {format, num_antennas, max_mode, coeffs} where coeffs is one
// row per antenna of [re, im] pairs ordered mode -K..K. Writing is
// deterministic, so write -> read -> write round-trips bit-exactly.

std::string eadf_to_json(const Eadf& eadf);
Eadf eadf_from_json(const std::string& text);
void write_eadf_file(const std::filesystem::path& path, const Eadf& eadf);
Eadf read_eadf_file(const std::filesystem::path& path);

// ---- switching schedule files (switch-v1) ----------------------------------
// JSON document {format, num_tx, num_snapshots, columns}; each column is the
// 1-based slot permutation of one snapshot.

void write_switch_file(const std::filesystem::path& path,
                       const SwitchMatrix& schedule);
SwitchMatrix read_switch_file(const std::filesystem::path& path);

// ---- scenario files (scenario-v1) ------------------------------------------
// Units at the file boundary: dwells in microseconds, delays in nanoseconds,
// angles in degrees, Doppler in Hz, path powers in dB.

struct ArraySpec {
  std::string type = "phase_mode_uca";  // phase_mode_uca | uca | file
  arma::uword num_antennas = 8;
  double radius_wavelengths = 0.5;  // uca only
  arma::uword max_mode = 20;        // uca only
  double perturbation = 0.0;        // uca only
  std::uint64_t seed = 0;           // uca only
  std::string path;                 // file only

  Eadf build(const std::filesystem::path& base_dir) const;
};

struct ScheduleSpec {
  std::string type = "uniform";  // uniform | columns | file
  arma::umat columns;            // columns only
  std::string path;              // file only

  SwitchMatrix build(const SoundingConfig& config,
                     const std::filesystem::path& base_dir) const;
};

struct PathSpec {
  double delay_ns = 0.0;
  double dod_deg = 0.0;
  double doa_deg = 0.0;
  double doppler_hz = 0.0;
  double power_db = 0.0;
  double phase_deg = 0.0;
};

struct ScenarioSpec {
  SoundingConfig config;
  ArraySpec tx_array;
  ArraySpec rx_array;
  ScheduleSpec schedule;
  std::vector<PathSpec> paths;
  double noise_sigma2 = 1.0;
};

// Scenario with arrays and schedule resolved to concrete objects.
struct Scenario {
  SoundingConfig config;
  Eadf tx_array;
  Eadf rx_array;
  SwitchMatrix schedule;
  PathSet paths;
  NoiseModel noise;
};

Scenario resolve_scenario(const ScenarioSpec& spec,
                          const std::filesystem::path& base_dir);
SounderSetup make_setup(const Scenario& scenario);

void write_scenario_file(const std::filesystem::path& path,
                         const ScenarioSpec& spec);
ScenarioSpec read_scenario_file(const std::filesystem::path& path);
// read + resolve file references relative to the scenario's directory.
Scenario load_scenario(const std::filesystem::path& path);

// ---- observation files (obs-v1) --------------------------------------------
// JSON document with a header echoing the sounding dimensions and the
// config hash, and samples as [re, im] pairs in layout order.

void write_observation_file(const std::filesystem::path& path,
                            const Observation& obs,
                            const SoundingConfig& config);
// If `expected` is given, dimension and config-hash mismatches are errors.
Observation read_observation_file(const std::filesystem::path& path,
                                  const SoundingConfig* expected = nullptr);

// ---- CSV outputs ------------------------------------------------------------

void write_anneal_trace_csv(const std::filesystem::path& path,
                            const AnnealTrace& trace);
void write_lm_trace_csv(const std::filesystem::path& path,
                        const std::vector<LmRecord>& trace);
// Rows over (phi_prime, delta_nu) for one reference departure angle.
void write_ambiguity_map_csv(const std::filesystem::path& path,
                             double phi_ref_rad, const arma::vec& phi_prime,
                             const arma::vec& delta_nu, const arma::mat& amp);
void write_spectrum_csv(const std::filesystem::path& path,
                        const arma::vec& delay_s, const arma::vec& doppler_hz,
                        const arma::mat& power);

// Estimated paths with CRLB columns as a readable table (ns / deg / Hz / dB).
void write_estimation_file(const std::filesystem::path& path,
                           const EstimationResult& result);

// ---- run manifests ----------------------------------------------------------

// manifest.json records the command, seed, parameters and content hashes of
// all inputs and outputs of one run directory.
void write_run_manifest(const std::filesystem::path& dir,
                        const std::string& command, std::uint64_t seed,
                        const std::string& params_json,
                        const std::vector<std::string>& output_files,
                        const std::map<std::string, std::string>& input_hashes);

// Re-hashes the outputs listed in dir/manifest.json. Returns true when all
// hashes match; mismatch details go to *detail.
bool check_run_directory(const std::filesystem::path& dir,
                         std::string* detail = nullptr);

}  // namespace soundseq
