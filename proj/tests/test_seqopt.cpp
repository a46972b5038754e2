#include <doctest.h>

#include <soundseq/seqopt.hpp>

#include "test_helpers.hpp"

using namespace soundseq;
using namespace soundseq::test;

TEST_CASE("neighbor: two-antenna schedule flips to the other permutation") {
  SwitchMatrix s = SwitchMatrix::uniform(2, 1);
  Rng rng(1);
  const SwitchMatrix n = neighbor(s, rng);
  CHECK(n.entries(0, 0) == 2);
  CHECK(n.entries(1, 0) == 1);
}

TEST_CASE("neighbor: single antenna has no distinct neighbor") {
  SwitchMatrix s = SwitchMatrix::uniform(1, 2);
  Rng rng(1);
  CHECK_THROWS_AS(neighbor(s, rng), validation_error);
}

TEST_CASE("neighbor: feasibility and two-row column difference") {
  Rng rng(99);
  SwitchMatrix s = SwitchMatrix::random(8, 3, rng);
  for (int i = 0; i < 10000; ++i) {
    const SwitchMatrix n = neighbor(s, rng);
    n.validate();
    arma::uword diff_cols = 0;
    arma::uword diff_rows = 0;
    for (arma::uword t = 0; t < 3; ++t) {
      arma::uword d = 0;
      for (arma::uword m = 0; m < 8; ++m) {
        if (n.entries(m, t) != s.entries(m, t)) ++d;
      }
      if (d > 0) ++diff_cols;
      diff_rows += d;
    }
    CHECK(diff_cols == 1);
    CHECK(diff_rows == 2);
    s = n;
  }
}

TEST_CASE("acceptance: always accepts improvements and ties") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(acceptance(1.0, 0.5, 1e-9, rng));
    CHECK(acceptance(1.0, 1.0, 1e-9, rng));
  }
}

TEST_CASE("acceptance: uphill frequency matches exp(-1) at delta == temp") {
  Rng rng(8);
  const int draws = 100000;
  int accepted = 0;
  for (int i = 0; i < draws; ++i) {
    if (acceptance(1.0, 1.0 + 0.37, 0.37, rng)) ++accepted;
  }
  const double freq = static_cast<double>(accepted) / draws;
  CHECK(std::abs(freq - std::exp(-1.0)) < 0.02);
}

TEST_CASE("anneal: immediate stop when the threshold is already met") {
  const SoundingConfig cfg = default_config();
  AnnealParams params;
  params.eps_th = 1e30;
  params.k_max = 50;
  params.seed = 5;
  const AnnealResult res =
      anneal(synthesize_phase_mode_uca(8), cfg,
             AmbiguityGridSpec::make(cfg, 24, 24, 33), params);
  CHECK(res.trace.records.size() == 1);  // initial record only
  res.best.validate();
}

TEST_CASE("anneal: short run improves on its starting cost and is exact") {
  const SoundingConfig cfg = default_config();
  const Eadf tx = synthesize_phase_mode_uca(8);
  const AmbiguityGridSpec grid = AmbiguityGridSpec::make(cfg, 24, 24, 33);
  AnnealParams params;
  params.k_max = 60;
  params.seed = 11;
  const AnnealResult a = anneal(tx, cfg, grid, params);
  const AnnealResult b = anneal(tx, cfg, grid, params);

  // Bit-exact reproducibility of trace and result.
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].cost == b.trace.records[i].cost);
    CHECK(a.trace.records[i].temperature == b.trace.records[i].temperature);
    CHECK(a.trace.records[i].accepted == b.trace.records[i].accepted);
  }
  CHECK(arma::all(arma::vectorise(a.best.entries == b.best.entries)));

  CHECK(a.best_cost <= a.trace.records.front().cost);

  // Best cost is non-increasing; temperature follows temp0 * alpha^k.
  double prev_best = std::numeric_limits<double>::infinity();
  for (const AnnealRecord& r : a.trace.records) {
    CHECK(r.best_cost <= prev_best);
    prev_best = r.best_cost;
    CHECK(r.temperature ==
          params.temp0 * std::pow(params.alpha, static_cast<double>(r.k)));
  }
}

TEST_CASE("anneal: every visited schedule is feasible") {
  const SoundingConfig cfg = default_config();
  AnnealParams params;
  params.k_max = 30;
  params.seed = 3;
  const AnnealResult res =
      anneal(synthesize_phase_mode_uca(8), cfg,
             AmbiguityGridSpec::make(cfg, 16, 16, 17), params);
  res.best.validate();
  CHECK(res.trace.records.size() == 31);
}

TEST_CASE("anneal: rejects invalid parameters") {
  AnnealParams params;
  params.alpha = 1.5;
  CHECK_THROWS_AS(params.validate(), validation_error);
  params = AnnealParams{};
  params.temp0 = 0.0;
  CHECK_THROWS_AS(params.validate(), validation_error);
}
