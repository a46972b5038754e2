#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <soundseq/harness.hpp>
#include <soundseq/io.hpp>

#include "test_helpers.hpp"

using namespace soundseq;
using namespace soundseq::test;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("soundseq_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("eadf file: write-read-write is bit-exact") {
  TempDir tmp;
  const Eadf original = synthesize_uca(8, 0.5, 20, 0.03, 7);
  const fs::path first = tmp.path / "a.json";
  const fs::path second = tmp.path / "b.json";
  write_eadf_file(first, original);
  const Eadf loaded = read_eadf_file(first);
  write_eadf_file(second, loaded);
  CHECK(slurp(first) == slurp(second));
  CHECK(arma::abs(loaded.coeffs() - original.coeffs()).max() == 0.0);
}

TEST_CASE("switch file: round-trips and validates") {
  TempDir tmp;
  Rng rng(3);
  const SwitchMatrix s = SwitchMatrix::random(8, 3, rng);
  const fs::path file = tmp.path / "schedule.json";
  write_switch_file(file, s);
  const SwitchMatrix loaded = read_switch_file(file);
  CHECK(arma::all(arma::vectorise(loaded.entries == s.entries)));
}

TEST_CASE("scenario file: units are converted on load") {
  TempDir tmp;
  ScenarioSpec spec = single_path_high_doppler_spec();
  const fs::path file = tmp.path / "scenario.json";
  write_scenario_file(file, spec);
  const Scenario scenario = load_scenario(file);
  CHECK(scenario.config.num_freq == 64);
  CHECK(scenario.config.snapshot_period_s == doctest::Approx(620e-6));
  REQUIRE(scenario.paths.size() == 1);
  CHECK(scenario.paths[0].delay_s == doctest::Approx(601.1e-9));
  CHECK(scenario.paths[0].dod_rad == doctest::Approx(deg_to_rad(11.5)));
  CHECK(scenario.paths[0].doppler_hz == doctest::Approx(4032.3));
  CHECK(scenario.tx_array.num_antennas() == 8);
}

TEST_CASE("scenario file: missing file names the path") {
  CHECK_THROWS_WITH_AS(read_scenario_file("/nonexistent/scenario.json"),
                       doctest::Contains("/nonexistent/scenario.json"),
                       validation_error);
}

TEST_CASE("scenario file: schedule and array file references resolve") {
  TempDir tmp;
  Rng rng(5);
  const SwitchMatrix s = SwitchMatrix::random(8, 3, rng);
  write_switch_file(tmp.path / "sched.json", s);
  write_eadf_file(tmp.path / "tx.json", synthesize_phase_mode_uca(8));
  ScenarioSpec spec = base_scenario_spec();
  spec.tx_array.type = "file";
  spec.tx_array.path = "tx.json";
  spec.schedule.type = "file";
  spec.schedule.path = "sched.json";
  spec.paths.push_back({100.0, 10.0, 20.0, 50.0, 0.0, 0.0});
  write_scenario_file(tmp.path / "scenario.json", spec);
  const Scenario scenario = load_scenario(tmp.path / "scenario.json");
  CHECK(arma::all(arma::vectorise(scenario.schedule.entries == s.entries)));
}

TEST_CASE("observation file: round-trip with config hash check") {
  TempDir tmp;
  const SounderSetup setup = small_setup(3);
  Rng rng(9);
  Observation obs;
  obs.samples.set_size(setup.config().total_samples());
  for (arma::uword i = 0; i < obs.samples.n_elem; ++i) {
    obs.samples(i) = rng.complex_normal();
  }
  const fs::path file = tmp.path / "obs.json";
  write_observation_file(file, obs, setup.config());
  const SoundingConfig cfg = setup.config();
  const Observation loaded = read_observation_file(file, &cfg);
  CHECK(arma::abs(loaded.samples - obs.samples).max() == 0.0);

  SoundingConfig other = cfg;
  other.freq_spacing_hz *= 2.0;
  CHECK_THROWS_AS(read_observation_file(file, &other), validation_error);
}

TEST_CASE("manifest: check passes on intact outputs and fails on edits") {
  TempDir tmp;
  std::ofstream(tmp.path / "data.csv") << "a,b\n1,2\n";
  write_run_manifest(tmp.path, "demo", 1729, "{\"x\":1}", {"data.csv"}, {});
  std::string detail;
  CHECK(check_run_directory(tmp.path, &detail));
  std::ofstream(tmp.path / "data.csv", std::ios::app) << "3,4\n";
  CHECK_FALSE(check_run_directory(tmp.path, &detail));
  CHECK(detail.find("data.csv") != std::string::npos);
}

TEST_CASE("fnv1a64: changes when any byte changes") {
  const std::string a = "switching sequence";
  std::string b = a;
  b[0] = 'S';
  CHECK(fnv1a64_hex(a) != fnv1a64_hex(b));
  CHECK(fnv1a64_hex(a) == fnv1a64_hex("switching sequence"));
}

TEST_CASE("csv writers: headers match the documented schemas") {
  TempDir tmp;
  AnnealTrace trace;
  trace.records.push_back({0, 100.0, 5.0, 5.0, true});
  write_anneal_trace_csv(tmp.path / "trace.csv", trace);
  CHECK(slurp(tmp.path / "trace.csv")
            .starts_with("k,temperature,cost,best_cost,accepted"));

  RmseTable table;
  table.rows.push_back({30.0, "nu_hz", 1.0, 0.9, 100, 2});
  write_rmse_csv(tmp.path / "rmse.csv", table);
  CHECK(slurp(tmp.path / "rmse.csv")
            .starts_with("snr_db,param,rmse,sqrt_crlb,n_trials,n_outliers"));

  write_spectrum_csv(tmp.path / "spec.csv", arma::vec{1e-9, 2e-9},
                     arma::vec{0.0, 100.0},
                     arma::mat(2, 2, arma::fill::ones));
  CHECK(slurp(tmp.path / "spec.csv").starts_with("tau_ns,nu_hz,power_db"));
}
