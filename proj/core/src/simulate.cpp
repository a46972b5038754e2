#include "soundseq/simulate.hpp"

namespace soundseq {

void NoiseModel::validate() const {
  if (!(sigma2 > 0.0)) {
    throw validation_error("NoiseModel.sigma2: must be > 0");
  }
}

Observation synth(const SounderSetup& setup, const PathSet& paths,
                  const NoiseModel& noise, Rng& rng) {
  noise.validate();
  validate_paths(paths);
  Observation obs = setup.signal(paths);
  const double sigma = std::sqrt(noise.sigma2);
  for (arma::uword i = 0; i < obs.samples.n_elem; ++i) {
    obs.samples(i) += sigma * rng.complex_normal();
  }
  return obs;
}

double snr_linear(const SounderSetup& setup, const PathSet& paths,
                  const NoiseModel& noise) {
  noise.validate();
  const Observation s = setup.signal(paths);
  const double energy = std::pow(arma::norm(s.samples), 2);
  return energy / noise.sigma2;
}

PathSet scale_to_snr(const SounderSetup& setup, PathSet paths,
                     const NoiseModel& noise, double rho_target) {
  noise.validate();
  if (!(rho_target > 0.0)) {
    throw validation_error("scale_to_snr: rho_target must be > 0");
  }
  const double rho_now = snr_linear(setup, paths, noise);
  if (rho_now == 0.0) {
    throw validation_error(
        "scale_to_snr: signal norm is zero, cannot scale to a positive SNR");
  }
  const double factor = std::sqrt(rho_target / rho_now);
  for (PathParams& path : paths) path.weight *= factor;
  return paths;
}

}  // namespace soundseq
