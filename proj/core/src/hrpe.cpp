#include "soundseq/hrpe.hpp"

#include <cstring>

namespace soundseq {

SearchGrid SearchGrid::defaults(const SoundingConfig& config) {
  config.validate();
  SearchGrid grid;
  const arma::uword n_f = 2 * config.num_freq;
  const double delay_span = 1.0 / config.freq_spacing_hz;
  grid.delay_s.set_size(n_f);
  for (arma::uword i = 0; i < n_f; ++i) {
    grid.delay_s(i) = static_cast<double>(i) * delay_span / n_f;
  }
  const arma::uword n_angle = 64;
  grid.doa_rad.set_size(n_angle);
  grid.dod_rad.set_size(n_angle);
  for (arma::uword i = 0; i < n_angle; ++i) {
    const double phi = -pi + (static_cast<double>(i) + 1.0) * two_pi / n_angle;
    grid.doa_rad(i) = phi;
    grid.dod_rad(i) = phi;
  }
  const arma::uword n_t = 2 * config.num_tx * config.num_snapshots;
  const double half = doppler_halfwidth_hz(config, /*scrambled_tx=*/true);
  grid.doppler_hz.set_size(n_t);
  for (arma::uword i = 0; i < n_t; ++i) {
    grid.doppler_hz(i) = -half + static_cast<double>(i) * (2.0 * half) / n_t;
  }
  return grid;
}

void SearchGrid::validate(const SoundingConfig& config) const {
  if (delay_s.n_elem == 0 || doa_rad.n_elem == 0 || dod_rad.n_elem == 0 ||
      doppler_hz.n_elem == 0) {
    throw validation_error("SearchGrid: all grids must be non-empty");
  }
  const arma::uword min_doppler = 2 * config.num_tx * config.num_snapshots;
  if (doppler_hz.n_elem < min_doppler) {
    throw validation_error(
        "SearchGrid.doppler_hz: needs at least 2*num_tx*num_snapshots = " +
        std::to_string(min_doppler) + " bins, got " +
        std::to_string(doppler_hz.n_elem));
  }
}

arma::uvec Tensor4::unflatten(arma::uword s) const {
  arma::uvec id(4);
  id(0) = s % dims(0);
  s /= dims(0);
  id(1) = s % dims(1);
  s /= dims(1);
  id(2) = s % dims(2);
  id(3) = s / dims(2);
  return id;
}

namespace {

double energy(const arma::cx_vec& v) {
  const double n = arma::norm(v);
  return n * n;
}

void check_observation(const SounderSetup& setup, const Observation& obs) {
  if (obs.samples.n_elem != setup.config().total_samples()) {
    throw validation_error(
        "Observation: sample count " + std::to_string(obs.samples.n_elem) +
        " does not equal M_f*M_R*M_T*T = " +
        std::to_string(setup.config().total_samples()));
  }
}

}  // namespace

double correlation(const SounderSetup& setup, const PathParams& mu,
                   const Observation& obs, double sigma2) {
  check_observation(setup, obs);
  if (!(sigma2 > 0.0)) {
    throw validation_error("correlation: sigma2 must be > 0");
  }
  const arma::cx_vec b = setup.basis_vector(mu);
  const double nb2 = energy(b);
  if (nb2 == 0.0) {
    throw numerical_error(
        "correlation: degenerate array, basis vector has zero norm");
  }
  return std::norm(arma::cdot(b, obs.samples)) / (sigma2 * nb2);
}

Tensor4 correlation_grid_naive(const SounderSetup& setup,
                               const Observation& obs, const SearchGrid& grid,
                               double sigma2) {
  grid.validate(setup.config());
  Tensor4 out;
  out.dims = {grid.delay_s.n_elem, grid.doa_rad.n_elem, grid.dod_rad.n_elem,
              grid.doppler_hz.n_elem};
  out.values.set_size(arma::prod(out.dims));
  for (arma::uword l = 0; l < grid.doppler_hz.n_elem; ++l) {
    for (arma::uword k = 0; k < grid.dod_rad.n_elem; ++k) {
      for (arma::uword j = 0; j < grid.doa_rad.n_elem; ++j) {
        for (arma::uword i = 0; i < grid.delay_s.n_elem; ++i) {
          PathParams mu;
          mu.delay_s = grid.delay_s(i);
          mu.doa_rad = grid.doa_rad(j);
          mu.dod_rad = grid.dod_rad(k);
          mu.doppler_hz = grid.doppler_hz(l);
          out.values(out.flat(i, j, k, l)) =
              correlation(setup, mu, obs, sigma2);
        }
      }
    }
  }
  return out;
}

Tensor4 correlation_grid_tensor(const SounderSetup& setup,
                                const Observation& obs, const SearchGrid& grid,
                                double sigma2) {
  grid.validate(setup.config());
  check_observation(setup, obs);
  if (!(sigma2 > 0.0)) {
    throw validation_error("correlation_grid_tensor: sigma2 must be > 0");
  }
  const SoundingConfig& cfg = setup.config();
  const arma::uword m_f = cfg.num_freq;
  const arma::uword m_r = cfg.num_rx;
  const arma::uword m_tt = cfg.num_tx * cfg.num_snapshots;
  const arma::uword n_f = grid.delay_s.n_elem;
  const arma::uword n_r = grid.doa_rad.n_elem;
  const arma::uword n_t = grid.dod_rad.n_elem;
  const arma::uword n_nu = grid.doppler_hz.n_elem;

  // The observation layout (frequency fastest, then RX, then TX dwell, then
  // snapshot) is exactly the column-major M_f x M_R x (M_T*T) cube.
  arma::cx_cube y3(m_f, m_r, m_tt);
  std::memcpy(y3.memptr(), obs.samples.memptr(),
              obs.samples.n_elem * sizeof(cx));

  arma::cx_mat b_f(m_f, n_f);
  for (arma::uword i = 0; i < n_f; ++i) {
    b_f.col(i) = setup.freq_basis(grid.delay_s(i));
  }
  const arma::cx_mat rx_steer = setup.rx_array().steering_matrix(grid.doa_rad);
  const arma::cx_mat tx_steer = setup.tx_array().steering_matrix(grid.dod_rad);

  // Column energies of the grid bases. Doppler weighting is unit-modulus, so
  // the RX energies do not depend on the Doppler bin and the TX-time
  // energies are T times the static ones.
  arma::vec nf2(n_f), nr2(n_r), nt2(n_t);
  for (arma::uword i = 0; i < n_f; ++i) nf2(i) = energy(b_f.col(i));
  for (arma::uword i = 0; i < n_r; ++i) nr2(i) = energy(rx_steer.col(i));
  for (arma::uword i = 0; i < n_t; ++i) {
    nt2(i) =
        energy(tx_steer.col(i)) * static_cast<double>(cfg.num_snapshots);
  }
  if (nf2.min() == 0.0 || nr2.min() == 0.0 || nt2.min() == 0.0) {
    throw numerical_error(
        "correlation_grid_tensor: degenerate array, zero basis energy");
  }

  Tensor4 out;
  out.dims = {n_f, n_r, n_t, n_nu};
  out.values.set_size(arma::prod(out.dims));

  const arma::mat& eta = setup.eta();
  for (arma::uword l = 0; l < n_nu; ++l) {
    const double nu = grid.doppler_hz(l);

    arma::cx_vec a_r(m_r);
    for (arma::uword m = 0; m < m_r; ++m) {
      a_r(m) = std::polar(
          1.0, two_pi * nu * static_cast<double>(m + 1) * cfg.rx_dwell_s);
    }
    arma::cx_mat b_r = rx_steer;
    b_r.each_col() %= a_r;

    arma::cx_mat b_t(m_tt, n_t);
    for (arma::uword t = 0; t < cfg.num_snapshots; ++t) {
      for (arma::uword m = 0; m < cfg.num_tx; ++m) {
        b_t.row(t * cfg.num_tx + m) =
            tx_steer.row(m) * std::polar(1.0, two_pi * nu * eta(m, t));
      }
    }

    // T1 = Y x1 B_f^H x2 B_R^H x3 B_T^H (mode products with conjugation).
    arma::cx_cube z1(n_f, m_r, m_tt);
    for (arma::uword s = 0; s < m_tt; ++s) {
      z1.slice(s) = b_f.t() * y3.slice(s);
    }
    arma::cx_cube z2(n_f, n_r, m_tt);
    const arma::cx_mat b_r_conj = arma::conj(b_r);
    for (arma::uword s = 0; s < m_tt; ++s) {
      z2.slice(s) = z1.slice(s) * b_r_conj;
    }
    const arma::cx_mat z2m(const_cast<cx*>(z2.memptr()), n_f * n_r, m_tt,
                           false, true);
    const arma::cx_mat t1 = z2m * arma::conj(b_t);  // (n_f*n_r) x n_t

    // C = |T1|^2 ./ T2 with T2 the per-cell basis energy over sigma2; the
    // 1/sigma2 whitening of T1 appears squared in the numerator.
    for (arma::uword k = 0; k < n_t; ++k) {
      for (arma::uword jj = 0; jj < n_r; ++jj) {
        const double denom_jk = nr2(jj) * nt2(k) * sigma2;
        for (arma::uword i = 0; i < n_f; ++i) {
          out.values(out.flat(i, jj, k, l)) =
              std::norm(t1(jj * n_f + i, k)) / (denom_jk * nf2(i));
        }
      }
    }
  }
  return out;
}

DetectResult detect_init(const SounderSetup& setup, const Observation& obs,
                         const SearchGrid& grid,
                         const DetectSettings& settings) {
  grid.validate(setup.config());
  check_observation(setup, obs);
  const arma::uword total = setup.config().total_samples();

  DetectResult result;
  arma::cx_vec residual = obs.samples;
  result.sigma2_hat = energy(residual) / total;
  const double threshold = db_to_linear(settings.threshold_db);
  const arma::uword target = settings.fixed_path_count
                                 ? *settings.fixed_path_count
                                 : settings.max_paths;

  while (result.paths.size() < target) {
    if (result.sigma2_hat <= 0.0) break;
    const Observation res_obs{residual};
    const Tensor4 c =
        correlation_grid_tensor(setup, res_obs, grid, result.sigma2_hat);
    const arma::uvec id = c.unflatten(c.values.index_max());

    PathParams candidate;
    candidate.delay_s = grid.delay_s(id(0));
    candidate.doa_rad = grid.doa_rad(id(1));
    candidate.dod_rad = grid.dod_rad(id(2));
    candidate.doppler_hz = grid.doppler_hz(id(3));
    {
      const arma::cx_vec b = setup.basis_vector(candidate);
      candidate.weight = arma::cdot(b, residual) / energy(b);
    }

    // Refine the single candidate against the current residual before the
    // joint weight re-fit.
    const EstimationResult single =
        lm_refine(setup, res_obs, {candidate}, result.sigma2_hat);
    PathParams refined = single.paths.empty() ? candidate : single.paths[0];

    PathSet trial = result.paths;
    trial.push_back(refined);
    const arma::cx_mat b_mat = setup.basis_matrix(trial);
    arma::cx_vec gamma;
    if (!arma::solve(gamma, b_mat, obs.samples)) {
      gamma = arma::pinv(b_mat) * obs.samples;
    }
    const arma::cx_vec new_residual = obs.samples - b_mat * gamma;
    const double gain = energy(residual) - energy(new_residual);

    const bool accepted = settings.fixed_path_count.has_value()
                              ? true
                              : gain > threshold * result.sigma2_hat;
    refined.weight = gamma(trial.size() - 1);
    result.log.push_back(
        {candidate, refined, gain, result.sigma2_hat, accepted});
    if (!accepted) break;

    for (std::size_t p = 0; p < trial.size(); ++p) trial[p].weight = gamma(p);
    result.paths = std::move(trial);
    residual = new_residual;
    result.sigma2_hat = energy(residual) / total;
  }
  return result;
}

arma::cx_mat jacobian(const SounderSetup& setup, const PathSet& paths) {
  if (paths.empty()) {
    throw validation_error("jacobian: need at least one path");
  }
  const SoundingConfig& cfg = setup.config();
  const arma::uword total = cfg.total_samples();
  const arma::vec f = cfg.freq_grid_hz();
  const arma::mat& eta = setup.eta();
  arma::cx_mat d(total, 6 * paths.size());

  for (std::size_t p = 0; p < paths.size(); ++p) {
    const PathParams& path = paths[p];
    const cx gamma = path.weight;

    const arma::cx_vec b_f = setup.freq_basis(path.delay_s);
    arma::cx_vec d_f(cfg.num_freq);
    for (arma::uword m = 0; m < cfg.num_freq; ++m) {
      d_f(m) = cx(0.0, -two_pi * f(m)) * b_f(m);
    }

    const arma::cx_vec rx_steer = setup.rx_array().steering(path.doa_rad);
    const arma::cx_vec rx_dsteer =
        setup.rx_array().steering_derivative(path.doa_rad);
    arma::cx_vec a_r(cfg.num_rx), da_r(cfg.num_rx);
    for (arma::uword m = 0; m < cfg.num_rx; ++m) {
      const double t_m = static_cast<double>(m + 1) * cfg.rx_dwell_s;
      a_r(m) = std::polar(1.0, two_pi * path.doppler_hz * t_m);
      da_r(m) = cx(0.0, two_pi * t_m) * a_r(m);
    }
    const arma::cx_vec b_r = rx_steer % a_r;

    const arma::cx_vec tx_steer = setup.tx_array().steering(path.dod_rad);
    const arma::cx_vec tx_dsteer =
        setup.tx_array().steering_derivative(path.dod_rad);
    const arma::uword m_tt = cfg.num_tx * cfg.num_snapshots;
    arma::cx_vec b_t(m_tt), b_t_dphi(m_tt), b_t_dnu(m_tt);
    for (arma::uword t = 0; t < cfg.num_snapshots; ++t) {
      for (arma::uword m = 0; m < cfg.num_tx; ++m) {
        const cx a_t = std::polar(1.0, two_pi * path.doppler_hz * eta(m, t));
        const arma::uword row = t * cfg.num_tx + m;
        b_t(row) = tx_steer(m) * a_t;
        b_t_dphi(row) = tx_dsteer(m) * a_t;
        b_t_dnu(row) = tx_steer(m) * cx(0.0, two_pi * eta(m, t)) * a_t;
      }
    }

    const arma::cx_vec col_re = arma::kron(arma::kron(b_t, b_r), b_f);
    const arma::uword base = 6 * p;
    d.col(base + 0) = gamma * arma::kron(arma::kron(b_t, b_r), d_f);
    d.col(base + 1) = gamma * arma::kron(arma::kron(b_t_dphi, b_r), b_f);
    d.col(base + 2) =
        gamma * arma::kron(arma::kron(b_t, rx_dsteer % a_r), b_f);
    d.col(base + 3) =
        gamma * (arma::kron(arma::kron(b_t_dnu, b_r), b_f) +
                 arma::kron(arma::kron(b_t, rx_steer % da_r), b_f));
    d.col(base + 4) = col_re;
    d.col(base + 5) = j_unit * col_re;
  }
  return d;
}

arma::mat fim(const SounderSetup& setup, const PathSet& paths, double sigma2) {
  if (!(sigma2 > 0.0)) throw validation_error("fim: sigma2 must be > 0");
  const arma::cx_mat d = jacobian(setup, paths);
  return (2.0 / sigma2) * arma::real(d.t() * d);
}

arma::vec score(const SounderSetup& setup, const Observation& obs,
                const PathSet& paths, double sigma2) {
  if (!(sigma2 > 0.0)) throw validation_error("score: sigma2 must be > 0");
  check_observation(setup, obs);
  const arma::cx_mat d = jacobian(setup, paths);
  const arma::cx_vec residual = obs.samples - setup.signal(paths).samples;
  return (2.0 / sigma2) * arma::real(d.t() * residual);
}

namespace {

arma::vec pack_parameters(const PathSet& paths) {
  arma::vec theta(6 * paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    theta(6 * p + 0) = paths[p].delay_s;
    theta(6 * p + 1) = paths[p].dod_rad;
    theta(6 * p + 2) = paths[p].doa_rad;
    theta(6 * p + 3) = paths[p].doppler_hz;
    theta(6 * p + 4) = paths[p].weight.real();
    theta(6 * p + 5) = paths[p].weight.imag();
  }
  return theta;
}

PathSet unpack_parameters(const arma::vec& theta) {
  PathSet paths(theta.n_elem / 6);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    paths[p].delay_s = std::max(theta(6 * p + 0), 0.0);
    paths[p].dod_rad = wrap_angle(theta(6 * p + 1));
    paths[p].doa_rad = wrap_angle(theta(6 * p + 2));
    paths[p].doppler_hz = theta(6 * p + 3);
    paths[p].weight = cx(theta(6 * p + 4), theta(6 * p + 5));
  }
  return paths;
}

// Reference magnitudes used to express step norms relative to one
// resolution cell per parameter type.
arma::vec parameter_scales(const SoundingConfig& cfg, const PathSet& paths) {
  double gamma_rms = 0.0;
  for (const PathParams& p : paths) gamma_rms += std::norm(p.weight);
  gamma_rms = std::sqrt(gamma_rms / paths.size());
  if (gamma_rms == 0.0) gamma_rms = 1.0;
  const double delay_scale =
      1.0 / (static_cast<double>(cfg.num_freq) * cfg.freq_spacing_hz);
  const double doppler_scale =
      1.0 /
      (static_cast<double>(cfg.num_snapshots) * cfg.snapshot_period_s);
  arma::vec s(6 * paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    s(6 * p + 0) = delay_scale;
    s(6 * p + 1) = 1.0;
    s(6 * p + 2) = 1.0;
    s(6 * p + 3) = doppler_scale;
    s(6 * p + 4) = gamma_rms;
    s(6 * p + 5) = gamma_rms;
  }
  return s;
}

// Solves (J + zeta*diag(J)) x = q with symmetric Jacobi scaling so that the
// parameter units cancel.
arma::vec solve_damped(const arma::mat& j_mat, const arma::vec& q,
                       double zeta, bool* used_pinv) {
  const arma::uword n = q.n_elem;
  arma::vec s(n);
  for (arma::uword i = 0; i < n; ++i) {
    const double d = j_mat(i, i);
    s(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  arma::mat a(n, n);
  for (arma::uword c = 0; c < n; ++c) {
    for (arma::uword r = 0; r < n; ++r) {
      a(r, c) = j_mat(r, c) * s(r) * s(c);
    }
  }
  a.diag() += zeta;
  const arma::vec rhs = q % s;
  arma::vec z;
  if (!arma::solve(z, a, rhs, arma::solve_opts::no_approx)) {
    z = arma::pinv(a) * rhs;
    if (used_pinv != nullptr) *used_pinv = true;
  }
  return z % s;
}

}  // namespace

EstimationResult lm_refine(const SounderSetup& setup, const Observation& obs,
                           const PathSet& initial, double sigma2,
                           const LmSettings& settings) {
  check_observation(setup, obs);
  if (!(sigma2 > 0.0)) throw validation_error("lm_refine: sigma2 must be > 0");
  const arma::uword total = setup.config().total_samples();

  EstimationResult result;
  if (initial.empty()) {
    result.sigma2_hat = energy(obs.samples) / total;
    return result;
  }

  arma::vec theta = pack_parameters(initial);
  const arma::vec scales = parameter_scales(setup.config(), initial);
  PathSet current = unpack_parameters(theta);
  double cost = energy(obs.samples - setup.signal(current).samples);
  double zeta = settings.zeta0;
  arma::uword rejections = 0;

  for (arma::uword iter = 1; iter <= settings.max_iterations; ++iter) {
    const arma::cx_mat d = jacobian(setup, current);
    const arma::cx_vec residual =
        obs.samples - setup.signal(current).samples;
    const arma::mat j_mat = (2.0 / sigma2) * arma::real(d.t() * d);
    const arma::vec q = (2.0 / sigma2) * arma::real(d.t() * residual);

    const arma::vec step =
        solve_damped(j_mat, q, zeta, &result.pseudo_inverse_used);
    const double step_norm = arma::abs(step / scales).max();

    const arma::vec theta_new = theta + step;
    const PathSet proposed = unpack_parameters(theta_new);
    const double cost_new =
        energy(obs.samples - setup.signal(proposed).samples);

    const bool accepted = cost_new < cost;
    if (accepted) {
      const double improvement = (cost - cost_new) / std::max(cost, 1e-300);
      theta = theta_new;
      current = proposed;
      cost = cost_new;
      zeta *= settings.zeta_shrink;
      rejections = 0;
      result.trace.push_back({iter, cost, zeta, step_norm, true});
      if (step_norm < settings.step_tol) break;
      if (improvement < settings.cost_tol) break;
    } else {
      zeta *= settings.zeta_grow;
      ++rejections;
      result.trace.push_back({iter, cost, zeta, step_norm, false});
      if (step_norm < settings.step_tol) break;
      if (rejections >= settings.max_consecutive_rejections) {
        result.diverged = true;
        break;
      }
    }
  }

  // Final weight re-fit by linear least squares.
  const arma::cx_mat b_mat = setup.basis_matrix(current);
  arma::cx_vec gamma;
  if (!arma::solve(gamma, b_mat, obs.samples)) {
    gamma = arma::pinv(b_mat) * obs.samples;
    result.pseudo_inverse_used = true;
  }
  for (std::size_t p = 0; p < current.size(); ++p) {
    current[p].weight = gamma(p);
  }
  result.paths = current;
  result.sigma2_hat = energy(obs.samples - b_mat * gamma) / total;
  result.crlb_std = crlb(setup, current, sigma2, &result.fim_condition,
                         &result.pseudo_inverse_used);
  return result;
}

arma::vec crlb(const SounderSetup& setup, const PathSet& paths, double sigma2,
               double* condition, bool* pseudo_inverse_used) {
  const arma::mat j_mat = fim(setup, paths, sigma2);
  const arma::uword n = j_mat.n_rows;
  arma::vec s(n);
  for (arma::uword i = 0; i < n; ++i) {
    const double d = j_mat(i, i);
    s(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  arma::mat a(n, n);
  for (arma::uword c = 0; c < n; ++c) {
    for (arma::uword r = 0; r < n; ++r) {
      a(r, c) = j_mat(r, c) * s(r) * s(c);
    }
  }
  if (condition != nullptr) *condition = arma::cond(a);
  arma::mat a_inv;
  if (!arma::inv_sympd(a_inv, a) && !arma::inv(a_inv, a)) {
    a_inv = arma::pinv(a);
    if (pseudo_inverse_used != nullptr) *pseudo_inverse_used = true;
  }
  arma::vec out(n);
  for (arma::uword i = 0; i < n; ++i) {
    out(i) = std::sqrt(std::max(a_inv(i, i), 0.0)) * s(i);
  }
  return out;
}

EstimationResult estimate(const SounderSetup& setup, const Observation& obs,
                          const SearchGrid& grid,
                          const DetectSettings& detect_settings,
                          const LmSettings& lm_settings) {
  DetectResult detected = detect_init(setup, obs, grid, detect_settings);
  EstimationResult result;
  if (detected.paths.empty()) {
    result.sigma2_hat = detected.sigma2_hat;
    result.detection_log = std::move(detected.log);
    return result;
  }
  result = lm_refine(setup, obs, detected.paths, detected.sigma2_hat,
                     lm_settings);
  result.detection_log = std::move(detected.log);
  return result;
}

}  // namespace soundseq
