#pragma once

#include <optional>
#include <string>
#include <vector>

#include "soundseq/sounding.hpp"

namespace soundseq {

// Multidimensional search grid for correlation-based path initialization.
struct SearchGrid {
  arma::vec delay_s;     // N_f bins
  arma::vec doa_rad;     // N_R bins
  arma::vec dod_rad;     // N_T bins
  arma::vec doppler_hz;  // N_t bins

  // 2*M_f delay bins over [0, 1/delta_f), 64 angle bins over (-pi, pi],
  // 2*M_T*T Doppler bins over [-M_T/(2*T0), M_T/(2*T0)).
  static SearchGrid defaults(const SoundingConfig& config);
  void validate(const SoundingConfig& config) const;
};

// Dense real 4-way tensor with dims (delay, doa, dod, doppler), delay index
// fastest.
struct Tensor4 {
  arma::uvec dims;   // 4 entries
  arma::vec values;  // dims(0)*dims(1)*dims(2)*dims(3)

  arma::uword flat(arma::uword i, arma::uword j, arma::uword k,
                   arma::uword l) const {
    return ((l * dims(2) + k) * dims(1) + j) * dims(0) + i;
  }
  double at(arma::uword i, arma::uword j, arma::uword k, arma::uword l) const {
    return values(flat(i, j, k, l));
  }
  arma::uvec unflatten(arma::uword s) const;
};

// Correlation statistic for one candidate path against an observation with
// white noise of variance sigma2: |b(mu)^H y|^2 / (sigma2 * ||b(mu)||^2).
double correlation(const SounderSetup& setup, const PathParams& mu,
                   const Observation& obs, double sigma2);

// Correlation on every grid point, evaluated pointwise. Reference oracle for
// the tensor-product path below.
Tensor4 correlation_grid_naive(const SounderSetup& setup,
                               const Observation& obs, const SearchGrid& grid,
                               double sigma2);

// Same tensor computed by reshaping the observation to M_f x M_R x (M_T*T)
// and contracting with conjugated grid basis matrices per Doppler bin; the
// denominators come from the squared-magnitude basis matrices contracted
// with the inverse-noise tensor (which factors for white noise).
Tensor4 correlation_grid_tensor(const SounderSetup& setup,
                                const Observation& obs, const SearchGrid& grid,
                                double sigma2);

struct DetectSettings {
  double threshold_db = 13.0;   // candidate power gain over the per-bin floor
  arma::uword max_paths = 10;
  // When set, exactly this many paths are extracted and the power threshold
  // is ignored (known model order).
  std::optional<arma::uword> fixed_path_count;
};

struct DetectionRecord {
  PathParams grid_candidate;  // argmax grid point before refinement
  PathParams refined;
  double power_gain = 0.0;    // residual energy removed by this candidate
  double sigma2_at_detection = 0.0;
  bool accepted = false;
};

struct DetectResult {
  PathSet paths;
  double sigma2_hat = 0.0;
  std::vector<DetectionRecord> log;
};

// Successive detection, single-path refinement and subtraction on the
// correlation grid. Path weights are re-fit jointly by least squares after
// each acceptance. Stops when the candidate's power gain falls below
// threshold * sigma2_hat, or at the path-count limit. May return an empty
// path set.
DetectResult detect_init(const SounderSetup& setup, const Observation& obs,
                         const SearchGrid& grid,
                         const DetectSettings& settings = {});

// Jacobian of the noiseless signal with respect to the stacked real
// parameter vector; columns ordered (tau, dod, doa, doppler, Re gamma,
// Im gamma) per path.
arma::cx_mat jacobian(const SounderSetup& setup, const PathSet& paths);

// Gaussian-ML Fisher information J = (2/sigma2) Re(D^H D) and score
// q = (2/sigma2) Re(D^H (y - s)) for the packed real parameters.
arma::mat fim(const SounderSetup& setup, const PathSet& paths, double sigma2);
arma::vec score(const SounderSetup& setup, const Observation& obs,
                const PathSet& paths, double sigma2);

struct LmSettings {
  double zeta0 = 0.01;
  double zeta_shrink = 0.3;
  double zeta_grow = 10.0;
  double step_tol = 1e-8;   // relative, per-parameter scaled
  double cost_tol = 1e-12;  // relative cost stagnation
  arma::uword max_iterations = 100;
  arma::uword max_consecutive_rejections = 10;
};

struct LmRecord {
  arma::uword iteration = 0;
  double cost = 0.0;
  double zeta = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

struct EstimationResult {
  PathSet paths;
  double sigma2_hat = 0.0;
  arma::vec crlb_std;  // 6 entries per path, parameter order as the Jacobian
  std::vector<LmRecord> trace;
  std::vector<DetectionRecord> detection_log;
  bool diverged = false;
  bool pseudo_inverse_used = false;
  double fim_condition = 0.0;
};

// Damped Gauss-Newton refinement of all path parameters jointly:
// theta <- theta + [J + zeta * diag(J)]^{-1} q, with zeta shrunk on
// improvement and grown on rejection. The final weights are re-fit by linear
// least squares and sigma2_hat is the residual sample variance.
EstimationResult lm_refine(const SounderSetup& setup, const Observation& obs,
                           const PathSet& initial, double sigma2,
                           const LmSettings& settings = {});

// Square roots of the diagonal of J^{-1}; 6 entries per path. If J is
// singular the pseudo-inverse is used and *pseudo_inverse_used is set.
arma::vec crlb(const SounderSetup& setup, const PathSet& paths, double sigma2,
               double* condition = nullptr,
               bool* pseudo_inverse_used = nullptr);

// Full pipeline: detect_init followed by joint LM refinement.
EstimationResult estimate(const SounderSetup& setup, const Observation& obs,
                          const SearchGrid& grid,
                          const DetectSettings& detect_settings = {},
                          const LmSettings& lm_settings = {});

}  // namespace soundseq
