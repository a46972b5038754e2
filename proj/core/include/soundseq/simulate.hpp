#pragma once

#include "soundseq/rng.hpp"
#include "soundseq/sounding.hpp"

namespace soundseq {

// White circular complex Gaussian measurement noise, variance sigma2 per
// complex sample.
struct NoiseModel {
  double sigma2 = 1.0;
  void validate() const;
};

// y = B(paths) * gamma + noise. Noise samples are drawn in observation order
// from the given source, so equal seeds give identical observations.
Observation synth(const SounderSetup& setup, const PathSet& paths,
                  const NoiseModel& noise, Rng& rng);

// Total signal-to-noise ratio ||s||^2 / sigma2 of the noiseless signal.
double snr_linear(const SounderSetup& setup, const PathSet& paths,
                  const NoiseModel& noise);

// Returns a copy of `paths` with every weight multiplied by the real
// positive factor that achieves ||s||^2 / sigma2 == rho_target.
PathSet scale_to_snr(const SounderSetup& setup, PathSet paths,
                     const NoiseModel& noise, double rho_target);

}  // namespace soundseq
