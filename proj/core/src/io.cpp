#include "soundseq/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace soundseq {

using nlohmann::json;

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw validation_error("cannot open file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw validation_error("cannot write file: " + path.string());
  }
  out << text;
  if (!out) {
    throw validation_error("write failed: " + path.string());
  }
}

json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw validation_error("invalid JSON in " + origin);
  }
  return j;
}

void expect_format(const json& j, const std::string& format,
                   const std::string& origin) {
  if (!j.contains("format") || j.at("format") != format) {
    throw validation_error(origin + ": expected format \"" + format + "\"");
  }
}

}  // namespace

// ---- hashing ----------------------------------------------------------------

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  return fnv1a64_hex(read_text_file(path));
}

std::string config_hash(const SoundingConfig& config) {
  json j;
  j["num_freq"] = config.num_freq;
  j["freq_spacing_hz"] = config.freq_spacing_hz;
  j["num_rx"] = config.num_rx;
  j["num_tx"] = config.num_tx;
  j["num_snapshots"] = config.num_snapshots;
  j["rx_dwell_s"] = config.rx_dwell_s;
  j["tx_dwell_s"] = config.tx_dwell_s;
  j["snapshot_period_s"] = config.snapshot_period_s;
  return fnv1a64_hex(j.dump());
}

// ---- eadf -------------------------------------------------------------------

std::string eadf_to_json(const Eadf& eadf) {
  json j;
  j["format"] = "eadf-v1";
  j["num_antennas"] = eadf.num_antennas();
  j["max_mode"] = eadf.max_mode();
  json rows = json::array();
  for (arma::uword m = 0; m < eadf.num_antennas(); ++m) {
    json row = json::array();
    for (arma::uword k = 0; k < eadf.coeffs().n_cols; ++k) {
      const cx v = eadf.coeffs()(m, k);
      row.push_back(json::array({v.real(), v.imag()}));
    }
    rows.push_back(std::move(row));
  }
  j["coeffs"] = std::move(rows);
  return j.dump(2) + "\n";
}

Eadf eadf_from_json(const std::string& text) {
  const json j = parse_json(text, "eadf document");
  expect_format(j, "eadf-v1", "eadf document");
  const arma::uword m = j.at("num_antennas").get<arma::uword>();
  const arma::uword k_max = j.at("max_mode").get<arma::uword>();
  const json& rows = j.at("coeffs");
  if (rows.size() != m) {
    throw validation_error("eadf document: coeffs row count does not match "
                           "num_antennas");
  }
  arma::cx_mat coeffs(m, 2 * k_max + 1);
  for (arma::uword r = 0; r < m; ++r) {
    const json& row = rows.at(r);
    if (row.size() != 2 * k_max + 1) {
      throw validation_error(
          "eadf document: row " + std::to_string(r) +
          " must hold 2*max_mode+1 coefficient pairs");
    }
    for (arma::uword c = 0; c < row.size(); ++c) {
      coeffs(r, c) = cx(row.at(c).at(0).get<double>(),
                        row.at(c).at(1).get<double>());
    }
  }
  return Eadf(coeffs);
}

void write_eadf_file(const std::filesystem::path& path, const Eadf& eadf) {
  write_text_file(path, eadf_to_json(eadf));
}

Eadf read_eadf_file(const std::filesystem::path& path) {
  return eadf_from_json(read_text_file(path));
}

// ---- switch matrix ----------------------------------------------------------

void write_switch_file(const std::filesystem::path& path,
                       const SwitchMatrix& schedule) {
  schedule.validate();
  json j;
  j["format"] = "switch-v1";
  j["num_tx"] = schedule.entries.n_rows;
  j["num_snapshots"] = schedule.entries.n_cols;
  json cols = json::array();
  for (arma::uword t = 0; t < schedule.entries.n_cols; ++t) {
    json col = json::array();
    for (arma::uword m = 0; m < schedule.entries.n_rows; ++m) {
      col.push_back(schedule.entries(m, t));
    }
    cols.push_back(std::move(col));
  }
  j["columns"] = std::move(cols);
  write_text_file(path, j.dump(2) + "\n");
}

SwitchMatrix read_switch_file(const std::filesystem::path& path) {
  const json j = parse_json(read_text_file(path), path.string());
  expect_format(j, "switch-v1", path.string());
  const arma::uword num_tx = j.at("num_tx").get<arma::uword>();
  const arma::uword num_snapshots = j.at("num_snapshots").get<arma::uword>();
  const json& cols = j.at("columns");
  if (cols.size() != num_snapshots) {
    throw validation_error(path.string() +
                           ": columns count does not match num_snapshots");
  }
  SwitchMatrix s;
  s.entries.set_size(num_tx, num_snapshots);
  for (arma::uword t = 0; t < num_snapshots; ++t) {
    const json& col = cols.at(t);
    if (col.size() != num_tx) {
      throw validation_error(path.string() + ": column " + std::to_string(t) +
                             " length does not match num_tx");
    }
    for (arma::uword m = 0; m < num_tx; ++m) {
      s.entries(m, t) = col.at(m).get<arma::uword>();
    }
  }
  s.validate();
  return s;
}

// ---- scenario ----------------------------------------------------------------

Eadf ArraySpec::build(const std::filesystem::path& base_dir) const {
  if (type == "phase_mode_uca") {
    return synthesize_phase_mode_uca(num_antennas);
  }
  if (type == "uca") {
    if (perturbation != 0.0) {
      return synthesize_uca(num_antennas, radius_wavelengths, max_mode,
                            perturbation, seed);
    }
    return synthesize_uca(num_antennas, radius_wavelengths, max_mode);
  }
  if (type == "file") {
    return read_eadf_file(base_dir / path);
  }
  throw validation_error("ArraySpec.type: unknown array type \"" + type +
                         "\" (expected phase_mode_uca, uca or file)");
}

SwitchMatrix ScheduleSpec::build(const SoundingConfig& config,
                                 const std::filesystem::path& base_dir) const {
  if (type == "uniform") {
    return SwitchMatrix::uniform(config.num_tx, config.num_snapshots);
  }
  if (type == "columns") {
    SwitchMatrix s;
    s.entries = columns;
    s.validate();
    return s;
  }
  if (type == "file") {
    return read_switch_file(base_dir / path);
  }
  throw validation_error("ScheduleSpec.type: unknown schedule type \"" + type +
                         "\" (expected uniform, columns or file)");
}

Scenario resolve_scenario(const ScenarioSpec& spec,
                          const std::filesystem::path& base_dir) {
  spec.config.validate();
  Scenario out;
  out.config = spec.config;
  out.tx_array = spec.tx_array.build(base_dir);
  out.rx_array = spec.rx_array.build(base_dir);
  out.schedule = spec.schedule.build(spec.config, base_dir);
  for (const PathSpec& p : spec.paths) {
    PathParams path;
    path.delay_s = p.delay_ns * 1e-9;
    path.dod_rad = wrap_angle(deg_to_rad(p.dod_deg));
    path.doa_rad = wrap_angle(deg_to_rad(p.doa_deg));
    path.doppler_hz = p.doppler_hz;
    path.weight = std::polar(std::sqrt(db_to_linear(p.power_db)),
                             deg_to_rad(p.phase_deg));
    out.paths.push_back(path);
  }
  validate_paths(out.paths);
  out.noise.sigma2 = spec.noise_sigma2;
  out.noise.validate();
  return out;
}

SounderSetup make_setup(const Scenario& scenario) {
  return SounderSetup(scenario.config, scenario.tx_array, scenario.rx_array,
                      scenario.schedule);
}

namespace {

json array_spec_to_json(const ArraySpec& a) {
  json j;
  j["type"] = a.type;
  if (a.type == "phase_mode_uca") {
    j["num_antennas"] = a.num_antennas;
  } else if (a.type == "uca") {
    j["num_antennas"] = a.num_antennas;
    j["radius_wavelengths"] = a.radius_wavelengths;
    j["max_mode"] = a.max_mode;
    if (a.perturbation != 0.0) {
      j["perturbation"] = a.perturbation;
      j["seed"] = a.seed;
    }
  } else if (a.type == "file") {
    j["path"] = a.path;
  }
  return j;
}

ArraySpec array_spec_from_json(const json& j, const std::string& origin) {
  ArraySpec a;
  a.type = j.at("type").get<std::string>();
  if (a.type == "file") {
    a.path = j.at("path").get<std::string>();
    return a;
  }
  a.num_antennas = j.at("num_antennas").get<arma::uword>();
  if (a.type == "uca") {
    a.radius_wavelengths = j.at("radius_wavelengths").get<double>();
    a.max_mode = j.at("max_mode").get<arma::uword>();
    a.perturbation = j.value("perturbation", 0.0);
    a.seed = j.value("seed", std::uint64_t{0});
  } else if (a.type != "phase_mode_uca") {
    throw validation_error(origin + ": unknown array type \"" + a.type + "\"");
  }
  return a;
}

}  // namespace

void write_scenario_file(const std::filesystem::path& path,
                         const ScenarioSpec& spec) {
  json j;
  j["format"] = "scenario-v1";
  json sounding;
  sounding["num_freq"] = spec.config.num_freq;
  sounding["freq_spacing_hz"] = spec.config.freq_spacing_hz;
  sounding["num_rx"] = spec.config.num_rx;
  sounding["num_tx"] = spec.config.num_tx;
  sounding["num_snapshots"] = spec.config.num_snapshots;
  sounding["rx_dwell_us"] = spec.config.rx_dwell_s * 1e6;
  sounding["tx_dwell_us"] = spec.config.tx_dwell_s * 1e6;
  sounding["snapshot_period_us"] = spec.config.snapshot_period_s * 1e6;
  j["sounding"] = std::move(sounding);
  j["tx_array"] = array_spec_to_json(spec.tx_array);
  j["rx_array"] = array_spec_to_json(spec.rx_array);
  json sched;
  sched["type"] = spec.schedule.type;
  if (spec.schedule.type == "columns") {
    json cols = json::array();
    for (arma::uword t = 0; t < spec.schedule.columns.n_cols; ++t) {
      json col = json::array();
      for (arma::uword m = 0; m < spec.schedule.columns.n_rows; ++m) {
        col.push_back(spec.schedule.columns(m, t));
      }
      cols.push_back(std::move(col));
    }
    sched["columns"] = std::move(cols);
  } else if (spec.schedule.type == "file") {
    sched["path"] = spec.schedule.path;
  }
  j["tx_schedule"] = std::move(sched);
  json paths = json::array();
  for (const PathSpec& p : spec.paths) {
    json jp;
    jp["delay_ns"] = p.delay_ns;
    jp["dod_deg"] = p.dod_deg;
    jp["doa_deg"] = p.doa_deg;
    jp["doppler_hz"] = p.doppler_hz;
    jp["power_db"] = p.power_db;
    jp["phase_deg"] = p.phase_deg;
    paths.push_back(std::move(jp));
  }
  j["paths"] = std::move(paths);
  j["noise"] = json{{"sigma2", spec.noise_sigma2}};
  write_text_file(path, j.dump(2) + "\n");
}

ScenarioSpec read_scenario_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw validation_error("scenario file not found: " + path.string());
  }
  const json j = parse_json(read_text_file(path), path.string());
  expect_format(j, "scenario-v1", path.string());
  ScenarioSpec spec;
  const json& s = j.at("sounding");
  spec.config.num_freq = s.at("num_freq").get<arma::uword>();
  spec.config.freq_spacing_hz = s.at("freq_spacing_hz").get<double>();
  spec.config.num_rx = s.at("num_rx").get<arma::uword>();
  spec.config.num_tx = s.at("num_tx").get<arma::uword>();
  spec.config.num_snapshots = s.at("num_snapshots").get<arma::uword>();
  spec.config.rx_dwell_s = s.at("rx_dwell_us").get<double>() * 1e-6;
  spec.config.tx_dwell_s = s.at("tx_dwell_us").get<double>() * 1e-6;
  spec.config.snapshot_period_s =
      s.at("snapshot_period_us").get<double>() * 1e-6;
  spec.tx_array = array_spec_from_json(j.at("tx_array"), path.string());
  spec.rx_array = array_spec_from_json(j.at("rx_array"), path.string());
  const json& sched = j.at("tx_schedule");
  spec.schedule.type = sched.at("type").get<std::string>();
  if (spec.schedule.type == "columns") {
    const json& cols = sched.at("columns");
    if (cols.empty()) {
      throw validation_error(path.string() + ": schedule columns empty");
    }
    spec.schedule.columns.set_size(cols.at(0).size(), cols.size());
    for (arma::uword t = 0; t < cols.size(); ++t) {
      for (arma::uword m = 0; m < cols.at(t).size(); ++m) {
        spec.schedule.columns(m, t) = cols.at(t).at(m).get<arma::uword>();
      }
    }
  } else if (spec.schedule.type == "file") {
    spec.schedule.path = sched.at("path").get<std::string>();
  }
  if (j.contains("paths")) {
    for (const json& jp : j.at("paths")) {
      PathSpec p;
      p.delay_ns = jp.at("delay_ns").get<double>();
      p.dod_deg = jp.at("dod_deg").get<double>();
      p.doa_deg = jp.at("doa_deg").get<double>();
      p.doppler_hz = jp.at("doppler_hz").get<double>();
      p.power_db = jp.value("power_db", 0.0);
      p.phase_deg = jp.value("phase_deg", 0.0);
      spec.paths.push_back(p);
    }
  }
  if (j.contains("noise")) {
    spec.noise_sigma2 = j.at("noise").value("sigma2", 1.0);
  }
  return spec;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const ScenarioSpec spec = read_scenario_file(path);
  return resolve_scenario(spec, path.parent_path());
}

// ---- observation --------------------------------------------------------------

void write_observation_file(const std::filesystem::path& path,
                            const Observation& obs,
                            const SoundingConfig& config) {
  if (obs.samples.n_elem != config.total_samples()) {
    throw validation_error(
        "write_observation_file: sample count does not match config");
  }
  json j;
  j["format"] = "obs-v1";
  j["config_hash"] = config_hash(config);
  j["num_freq"] = config.num_freq;
  j["num_rx"] = config.num_rx;
  j["num_tx"] = config.num_tx;
  j["num_snapshots"] = config.num_snapshots;
  json samples = json::array();
  for (arma::uword i = 0; i < obs.samples.n_elem; ++i) {
    samples.push_back(
        json::array({obs.samples(i).real(), obs.samples(i).imag()}));
  }
  j["samples"] = std::move(samples);
  write_text_file(path, j.dump() + "\n");
}

Observation read_observation_file(const std::filesystem::path& path,
                                  const SoundingConfig* expected) {
  const json j = parse_json(read_text_file(path), path.string());
  expect_format(j, "obs-v1", path.string());
  if (expected != nullptr) {
    if (j.at("config_hash").get<std::string>() != config_hash(*expected)) {
      throw validation_error(path.string() +
                             ": config hash does not match the scenario");
    }
  }
  const json& samples = j.at("samples");
  Observation obs;
  obs.samples.set_size(samples.size());
  for (arma::uword i = 0; i < samples.size(); ++i) {
    obs.samples(i) = cx(samples.at(i).at(0).get<double>(),
                        samples.at(i).at(1).get<double>());
  }
  if (expected != nullptr &&
      obs.samples.n_elem != expected->total_samples()) {
    throw validation_error(path.string() +
                           ": sample count does not match the scenario");
  }
  return obs;
}

// ---- CSV ----------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_anneal_trace_csv(const std::filesystem::path& path,
                            const AnnealTrace& trace) {
  std::ostringstream out;
  out << "k,temperature,cost,best_cost,accepted\n";
  for (const AnnealRecord& r : trace.records) {
    out << r.k << ',' << format_double(r.temperature) << ','
        << format_double(r.cost) << ',' << format_double(r.best_cost) << ','
        << (r.accepted ? 1 : 0) << '\n';
  }
  write_text_file(path, out.str());
}

void write_lm_trace_csv(const std::filesystem::path& path,
                        const std::vector<LmRecord>& trace) {
  std::ostringstream out;
  out << "iteration,cost,zeta,step_norm,accepted\n";
  for (const LmRecord& r : trace) {
    out << r.iteration << ',' << format_double(r.cost) << ','
        << format_double(r.zeta) << ',' << format_double(r.step_norm) << ','
        << (r.accepted ? 1 : 0) << '\n';
  }
  write_text_file(path, out.str());
}

void write_ambiguity_map_csv(const std::filesystem::path& path,
                             double phi_ref_rad, const arma::vec& phi_prime,
                             const arma::vec& delta_nu, const arma::mat& amp) {
  if (amp.n_rows != phi_prime.n_elem || amp.n_cols != delta_nu.n_elem) {
    throw validation_error(
        "write_ambiguity_map_csv: amp shape must be phi_prime x delta_nu");
  }
  std::ostringstream out;
  out << "phi_t_deg,phi_t_prime_deg,delta_nu_hz,abs_x,abs_x_db\n";
  const double ref_deg = rad_to_deg(phi_ref_rad);
  for (arma::uword i = 0; i < phi_prime.n_elem; ++i) {
    for (arma::uword k = 0; k < delta_nu.n_elem; ++k) {
      const double a = amp(i, k);
      out << format_double(ref_deg) << ','
          << format_double(rad_to_deg(phi_prime(i))) << ','
          << format_double(delta_nu(k)) << ',' << format_double(a) << ','
          << format_double(a > 0.0 ? amplitude_db(a) : -999.0) << '\n';
    }
  }
  write_text_file(path, out.str());
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const arma::vec& delay_s, const arma::vec& doppler_hz,
                        const arma::mat& power) {
  if (power.n_rows != delay_s.n_elem || power.n_cols != doppler_hz.n_elem) {
    throw validation_error(
        "write_spectrum_csv: power shape must be delay x doppler");
  }
  std::ostringstream out;
  out << "tau_ns,nu_hz,power_db\n";
  for (arma::uword i = 0; i < delay_s.n_elem; ++i) {
    for (arma::uword k = 0; k < doppler_hz.n_elem; ++k) {
      const double p = power(i, k);
      out << format_double(delay_s(i) * 1e9) << ','
          << format_double(doppler_hz(k)) << ','
          << format_double(p > 0.0 ? linear_to_db(p) : -999.0) << '\n';
    }
  }
  write_text_file(path, out.str());
}

void write_estimation_file(const std::filesystem::path& path,
                           const EstimationResult& result) {
  std::ostringstream out;
  out << "paths: " << result.paths.size() << '\n';
  out << "sigma2_hat: " << format_double(result.sigma2_hat) << '\n';
  out << "diverged: " << (result.diverged ? 1 : 0) << '\n';
  out << "fim_condition: " << format_double(result.fim_condition) << '\n';
  out << "pseudo_inverse_used: " << (result.pseudo_inverse_used ? 1 : 0)
      << '\n';
  out << "path,delay_ns,dod_deg,doa_deg,doppler_hz,power_db,phase_deg,"
         "crlb_delay_ns,crlb_dod_deg,crlb_doa_deg,crlb_doppler_hz\n";
  for (std::size_t p = 0; p < result.paths.size(); ++p) {
    const PathParams& path_p = result.paths[p];
    out << p + 1 << ',' << format_double(path_p.delay_s * 1e9) << ','
        << format_double(rad_to_deg(path_p.dod_rad)) << ','
        << format_double(rad_to_deg(path_p.doa_rad)) << ','
        << format_double(path_p.doppler_hz) << ','
        << format_double(linear_to_db(std::norm(path_p.weight))) << ','
        << format_double(rad_to_deg(std::arg(path_p.weight)));
    if (result.crlb_std.n_elem >= 6 * (p + 1)) {
      out << ',' << format_double(result.crlb_std(6 * p + 0) * 1e9) << ','
          << format_double(rad_to_deg(result.crlb_std(6 * p + 1))) << ','
          << format_double(rad_to_deg(result.crlb_std(6 * p + 2))) << ','
          << format_double(result.crlb_std(6 * p + 3));
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

// ---- manifest -------------------------------------------------------------------

void write_run_manifest(const std::filesystem::path& dir,
                        const std::string& command, std::uint64_t seed,
                        const std::string& params_json,
                        const std::vector<std::string>& output_files,
                        const std::map<std::string, std::string>& input_hashes) {
  json j;
  j["format"] = "run-v1";
  j["command"] = command;
  j["seed"] = seed;
  j["params"] = parse_json(params_json, "manifest params");
  j["inputs"] = input_hashes;
  json outputs;
  for (const std::string& name : output_files) {
    outputs[name] = hash_file(dir / name);
  }
  j["outputs"] = std::move(outputs);
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

bool check_run_directory(const std::filesystem::path& dir,
                         std::string* detail) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    if (detail != nullptr) *detail = "missing manifest: " + manifest_path.string();
    return false;
  }
  const json j = parse_json(read_text_file(manifest_path),
                            manifest_path.string());
  expect_format(j, "run-v1", manifest_path.string());
  bool ok = true;
  std::string report;
  for (const auto& [name, expected] : j.at("outputs").items()) {
    const std::filesystem::path file = dir / name;
    if (!std::filesystem::exists(file)) {
      ok = false;
      report += "missing output: " + name + "\n";
      continue;
    }
    const std::string actual = hash_file(file);
    if (actual != expected.get<std::string>()) {
      ok = false;
      report += "hash mismatch: " + name + "\n";
    }
  }
  if (detail != nullptr) *detail = report;
  return ok;
}

}  // namespace soundseq
