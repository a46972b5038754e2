#include "soundseq/seqopt.hpp"

#include <future>

namespace soundseq {

void AnnealParams::validate() const {
  if (p < 1) throw validation_error("AnnealParams.p: must be >= 1");
  if (!(temp0 > 0.0)) throw validation_error("AnnealParams.temp0: must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error("AnnealParams.alpha: must be in (0, 1)");
  }
  if (k_max < 1) throw validation_error("AnnealParams.k_max: must be >= 1");
}

SwitchMatrix neighbor(const SwitchMatrix& schedule, Rng& rng) {
  schedule.validate();
  const arma::uword num_tx = schedule.entries.n_rows;
  if (num_tx < 2) {
    throw validation_error(
        "neighbor: num_tx must be >= 2 to have a distinct neighbor");
  }
  SwitchMatrix out = schedule;
  const arma::uword t = rng.uniform_index(schedule.entries.n_cols);
  const arma::uword r1 = rng.uniform_index(num_tx);
  arma::uword r2 = rng.uniform_index(num_tx - 1);
  if (r2 >= r1) ++r2;
  std::swap(out.entries(r1, t), out.entries(r2, t));
  return out;
}

bool acceptance(double current, double proposed, double temperature,
                Rng& rng) {
  const double u = rng.uniform();
  if (proposed <= current) return true;  // exp(.) >= 1 > u
  return std::exp((current - proposed) / temperature) > u;
}

AnnealResult anneal(const Eadf& tx_array, const SoundingConfig& config,
                    const AmbiguityGridSpec& grid,
                    const AnnealParams& params) {
  params.validate();
  const TxAmbiguityMap map(tx_array, config, grid);
  Rng rng(params.seed);

  SwitchMatrix current =
      SwitchMatrix::random(config.num_tx, config.num_snapshots, rng);
  double cost = map.cost_f_p(eta_from_schedule(config, current), params.p);

  AnnealResult result;
  result.best = current;
  result.best_cost = cost;
  result.trace.records.push_back({0, params.temp0, cost, cost, true});

  for (arma::uword k = 1; k <= params.k_max && cost > params.eps_th; ++k) {
    const double temperature =
        params.temp0 * std::pow(params.alpha, static_cast<double>(k));
    const SwitchMatrix proposal = neighbor(current, rng);
    const double proposed_cost =
        map.cost_f_p(eta_from_schedule(config, proposal), params.p);
    const bool accepted = acceptance(cost, proposed_cost, temperature, rng);
    if (accepted) {
      current = proposal;
      cost = proposed_cost;
      if (cost < result.best_cost) {
        result.best = current;
        result.best_cost = cost;
      }
    }
    result.trace.records.push_back(
        {k, temperature, cost, result.best_cost, accepted});
  }
  return result;
}

AnnealResult anneal_ensemble(const Eadf& tx_array,
                             const SoundingConfig& config,
                             const AmbiguityGridSpec& grid,
                             const AnnealParams& params, arma::uword chains,
                             arma::uword jobs) {
  if (chains < 1) {
    throw validation_error("anneal_ensemble: chains must be >= 1");
  }
  std::vector<AnnealResult> results(chains);
  const arma::uword workers = std::max<arma::uword>(1, std::min(jobs, chains));
  if (workers <= 1) {
    for (arma::uword i = 0; i < chains; ++i) {
      AnnealParams chain_params = params;
      chain_params.seed = params.seed + i;
      results[i] = anneal(tx_array, config, grid, chain_params);
    }
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    for (arma::uword w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (arma::uword i = w; i < chains; i += workers) {
          AnnealParams chain_params = params;
          chain_params.seed = params.seed + i;
          results[i] = anneal(tx_array, config, grid, chain_params);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }
  arma::uword winner = 0;
  for (arma::uword i = 1; i < chains; ++i) {
    if (results[i].best_cost < results[winner].best_cost) winner = i;
  }
  return results[winner];
}

}  // namespace soundseq
