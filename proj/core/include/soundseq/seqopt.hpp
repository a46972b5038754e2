#pragma once

#include <cstdint>
#include <vector>

#include "soundseq/ambiguity.hpp"
#include "soundseq/rng.hpp"
#include "soundseq/sounding.hpp"

namespace soundseq {

struct AnnealParams {
  int p = 6;
  double temp0 = 100.0;
  double alpha = 0.97;
  arma::uword k_max = 500;
  double eps_th = 0.0;
  std::uint64_t seed = 1729;

  void validate() const;
};

struct AnnealRecord {
  arma::uword k = 0;
  double temperature = 0.0;
  double cost = 0.0;
  double best_cost = 0.0;
  bool accepted = false;
};

struct AnnealTrace {
  std::vector<AnnealRecord> records;  // record 0 is the initial state
};

struct AnnealResult {
  SwitchMatrix best;
  double best_cost = 0.0;
  AnnealTrace trace;
};

// Swaps two distinct rows within one uniformly chosen column; the result
// stays a column permutation. Requires num_tx >= 2.
SwitchMatrix neighbor(const SwitchMatrix& schedule, Rng& rng);

// Accept a move from cost `current` to cost `proposed` at the given
// temperature: always when the proposal improves, otherwise with probability
// exp((current - proposed) / temperature). Consumes exactly one uniform draw.
bool acceptance(double current, double proposed, double temperature, Rng& rng);

// Simulated annealing over column-permutation schedules minimizing
// cost_f_p(eta(S), p). Starts from seeded independent uniform-random column
// permutations, cools geometrically (temperature at pass k is
// temp0 * alpha^k) and returns the best schedule visited by the chain.
AnnealResult anneal(const Eadf& tx_array, const SoundingConfig& config,
                    const AmbiguityGridSpec& grid, const AnnealParams& params);

// Independent chains with seeds params.seed, params.seed+1, ... merged by
// min cost (first seed wins ties). Returns the winning chain's result.
AnnealResult anneal_ensemble(const Eadf& tx_array,
                             const SoundingConfig& config,
                             const AmbiguityGridSpec& grid,
                             const AnnealParams& params, arma::uword chains,
                             arma::uword jobs = 1);

}  // namespace soundseq
