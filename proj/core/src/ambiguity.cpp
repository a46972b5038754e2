#include "soundseq/ambiguity.hpp"

#include <vector>

namespace soundseq {

AmbiguityGridSpec AmbiguityGridSpec::defaults(const SoundingConfig& config) {
  return make(config, 72, 72, 16 * config.num_tx + 1);
}

AmbiguityGridSpec AmbiguityGridSpec::make(const SoundingConfig& config,
                                          arma::uword n_phi,
                                          arma::uword n_phi_prime,
                                          arma::uword n_nu) {
  config.validate();
  AmbiguityGridSpec grid;
  grid.nu_upper_hz = doppler_halfwidth_hz(config, /*scrambled_tx=*/true);
  grid.phi.set_size(n_phi);
  for (arma::uword i = 0; i < n_phi; ++i) {
    grid.phi(i) = -pi + (static_cast<double>(i) + 0.5) * two_pi / n_phi;
  }
  grid.phi_prime.set_size(n_phi_prime);
  for (arma::uword i = 0; i < n_phi_prime; ++i) {
    grid.phi_prime(i) =
        -pi + (static_cast<double>(i) + 0.5) * two_pi / n_phi_prime;
  }
  grid.delta_nu = arma::linspace(0.0, grid.nu_upper_hz, n_nu);
  grid.validate();
  return grid;
}

void AmbiguityGridSpec::validate() const {
  if (phi.n_elem == 0 || phi_prime.n_elem == 0 || delta_nu.n_elem == 0) {
    throw validation_error("AmbiguityGridSpec: grids must be non-empty");
  }
  if (!(nu_upper_hz > 0.0)) {
    throw validation_error("AmbiguityGridSpec.nu_upper_hz: must be > 0");
  }
  auto check_increasing = [](const arma::vec& v, const char* name) {
    for (arma::uword i = 1; i < v.n_elem; ++i) {
      if (!(v(i) > v(i - 1))) {
        throw validation_error(std::string("AmbiguityGridSpec.") + name +
                               ": must be strictly increasing");
      }
    }
  };
  check_increasing(phi, "phi");
  check_increasing(phi_prime, "phi_prime");
  check_increasing(delta_nu, "delta_nu");
  if (delta_nu(0) != 0.0) {
    throw validation_error("AmbiguityGridSpec.delta_nu: must start at 0");
  }
}

namespace {

cx normalized_inner(const arma::cx_vec& a, const arma::cx_vec& b) {
  const double na = arma::norm(a);
  const double nb = arma::norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw numerical_error(
        "ambiguity: degenerate array, basis vector has zero norm");
  }
  return arma::cdot(a, b) / (na * nb);
}

// Cell widths for a point grid covering [lo, hi]: Voronoi cells bounded by
// midpoints between neighbours and by the domain ends. Reduces to the
// midpoint rule for midpoint grids.
arma::vec cell_widths(const arma::vec& points, double lo, double hi) {
  const arma::uword n = points.n_elem;
  arma::vec w(n);
  if (n == 1) {
    w(0) = hi - lo;
    return w;
  }
  for (arma::uword i = 0; i < n; ++i) {
    const double left = (i == 0) ? lo : 0.5 * (points(i - 1) + points(i));
    const double right =
        (i + 1 == n) ? hi : 0.5 * (points(i) + points(i + 1));
    w(i) = right - left;
  }
  return w;
}

}  // namespace

cx x_tot(const SounderSetup& setup, const PathParams& a, const PathParams& b) {
  return normalized_inner(setup.basis_vector(a), setup.basis_vector(b));
}

SplitAmbiguity x_split(const SounderSetup& setup, const PathParams& a,
                       const PathParams& b) {
  SplitAmbiguity out;
  out.x_tau = normalized_inner(setup.freq_basis(a.delay_s),
                               setup.freq_basis(b.delay_s));
  const cx x_t = normalized_inner(
      setup.tx_time_basis(a.dod_rad, a.doppler_hz),
      setup.tx_time_basis(b.dod_rad, b.doppler_hz));
  const cx x_r = normalized_inner(setup.rx_basis(a.doa_rad, a.doppler_hz),
                                  setup.rx_basis(b.doa_rad, b.doppler_hz));
  out.x_kappa = x_t * x_r;
  return out;
}

cx x_T_direct(const SounderSetup& setup, double dod_rad, double dod_prime_rad,
              double nu_hz, double nu_prime_hz) {
  return normalized_inner(setup.tx_time_basis(dod_rad, nu_hz),
                          setup.tx_time_basis(dod_prime_rad, nu_prime_hz));
}

cx x_T_fast(const SounderSetup& setup, double dod_rad, double dod_prime_rad,
            double delta_nu_hz) {
  const arma::cx_vec b = setup.tx_array().steering(dod_rad);
  const arma::cx_vec b_prime = setup.tx_array().steering(dod_prime_rad);
  const double nb = arma::norm(b);
  const double nb_prime = arma::norm(b_prime);
  if (nb == 0.0 || nb_prime == 0.0) {
    throw numerical_error(
        "x_T_fast: degenerate array, steering vector has zero norm");
  }
  const arma::mat& eta = setup.eta();
  cx acc{0.0, 0.0};
  for (arma::uword m = 0; m < eta.n_rows; ++m) {
    cx v{0.0, 0.0};
    for (arma::uword t = 0; t < eta.n_cols; ++t) {
      v += std::polar(1.0, two_pi * delta_nu_hz * eta(m, t));
    }
    acc += std::conj(b(m)) * b_prime(m) * v;
  }
  const double t_count = static_cast<double>(eta.n_cols);
  return acc / (t_count * nb * nb_prime);
}

TxAmbiguityMap::TxAmbiguityMap(const Eadf& tx_array,
                               const SoundingConfig& config,
                               AmbiguityGridSpec grid)
    : config_(config), grid_(std::move(grid)) {
  config_.validate();
  grid_.validate();
  if (tx_array.num_antennas() != config_.num_tx) {
    throw validation_error(
        "TxAmbiguityMap: tx_array antenna count does not match config.num_tx");
  }
  steer_phi_ = tx_array.steering_matrix(grid_.phi);
  steer_phi_prime_ = tx_array.steering_matrix(grid_.phi_prime);
  norm_phi_.set_size(grid_.phi.n_elem);
  for (arma::uword i = 0; i < grid_.phi.n_elem; ++i) {
    norm_phi_(i) = arma::norm(steer_phi_.col(i));
    if (norm_phi_(i) == 0.0) {
      throw numerical_error("TxAmbiguityMap: steering norm is zero at a grid "
                            "angle; degenerate array");
    }
  }
  norm_phi_prime_.set_size(grid_.phi_prime.n_elem);
  for (arma::uword i = 0; i < grid_.phi_prime.n_elem; ++i) {
    norm_phi_prime_(i) = arma::norm(steer_phi_prime_.col(i));
    if (norm_phi_prime_(i) == 0.0) {
      throw numerical_error("TxAmbiguityMap: steering norm is zero at a grid "
                            "angle; degenerate array");
    }
  }
  weight_phi_ = cell_widths(grid_.phi, -pi, pi);
  weight_phi_prime_ = cell_widths(grid_.phi_prime, -pi, pi);
  weight_nu_ = cell_widths(grid_.delta_nu, 0.0, grid_.nu_upper_hz);
}

arma::cx_mat TxAmbiguityMap::doppler_table(const arma::mat& eta) const {
  if (eta.n_rows != config_.num_tx || eta.n_cols != config_.num_snapshots) {
    throw validation_error(
        "TxAmbiguityMap: eta shape must be num_tx x num_snapshots");
  }
  arma::cx_mat v(config_.num_tx, grid_.delta_nu.n_elem, arma::fill::zeros);
  for (arma::uword k = 0; k < grid_.delta_nu.n_elem; ++k) {
    const double dnu = grid_.delta_nu(k);
    for (arma::uword t = 0; t < config_.num_snapshots; ++t) {
      for (arma::uword m = 0; m < config_.num_tx; ++m) {
        v(m, k) += std::polar(1.0, two_pi * dnu * eta(m, t));
      }
    }
  }
  return v;
}

double TxAmbiguityMap::cost_f_p(const arma::mat& eta, int p) const {
  if (p < 1) throw validation_error("cost_f_p: p must be >= 1");
  const arma::cx_mat v = doppler_table(eta);  // M_T x N_nu
  const double t_count = static_cast<double>(config_.num_snapshots);
  const arma::uword n_phi = grid_.phi.n_elem;
  const arma::uword n_prime = grid_.phi_prime.n_elem;
  const arma::uword n_nu = grid_.delta_nu.n_elem;
  const bool p_even = (p % 2 == 0);
  const int p_half = p / 2;
  // |X|^p via squaring on |X|^2; exact powers, no libm pow in the hot loop.
  const auto int_pow = [](double base, int e) {
    double acc = 1.0;
    while (e > 0) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    return acc;
  };

  std::vector<double> slab(n_prime * n_nu);
  std::vector<double> partials(n_phi);
  for (arma::uword i = 0; i < n_phi; ++i) {
    // W = conj(b(phi_i)) .* b(phi'_j) per column, then X = W^T v.
    arma::cx_mat w = steer_phi_prime_;
    w.each_col() %= arma::conj(steer_phi_.col(i));
    const arma::cx_mat x = w.st() * v;  // N_phi' x N_nu
    const double denom_i = t_count * norm_phi_(i);
    arma::uword s = 0;
    for (arma::uword jj = 0; jj < n_prime; ++jj) {
      const double scale = 1.0 / (denom_i * norm_phi_prime_(jj));
      const double w_j = weight_phi_(i) * weight_phi_prime_(jj);
      for (arma::uword k = 0; k < n_nu; ++k, ++s) {
        const double mag2 = std::norm(x(jj, k)) * scale * scale;
        const double amp_pow = p_even ? int_pow(mag2, p_half)
                                      : int_pow(std::sqrt(mag2), p);
        slab[s] = amp_pow * w_j * weight_nu_(k);
      }
    }
    partials[i] = pairwise_sum(slab);
  }
  return pairwise_sum(partials);
}

arma::mat TxAmbiguityMap::amplitude_map(const arma::mat& eta,
                                        arma::uword phi_index) const {
  if (phi_index >= grid_.phi.n_elem) {
    throw validation_error("amplitude_map: phi_index out of range");
  }
  const arma::cx_mat v = doppler_table(eta);
  const double t_count = static_cast<double>(config_.num_snapshots);
  arma::cx_mat w = steer_phi_prime_;
  w.each_col() %= arma::conj(steer_phi_.col(phi_index));
  arma::mat amp = arma::abs(w.st() * v);
  for (arma::uword jj = 0; jj < grid_.phi_prime.n_elem; ++jj) {
    amp.row(jj) /= t_count * norm_phi_(phi_index) * norm_phi_prime_(jj);
  }
  return amp;  // N_phi' x N_nu
}

namespace {

// 4-connected flood fill over cells with amp >= level, starting from
// (row0, col0). Rows are probe azimuths and wrap around (the angle axis is
// periodic); columns are Doppler differences and do not. Marks visited
// cells in `in_lobe`.
void flood_fill(const arma::mat& amp, double level, arma::uword row0,
                arma::uword col0, std::vector<char>& in_lobe) {
  const arma::uword n_rows = amp.n_rows;
  const arma::uword n_cols = amp.n_cols;
  auto idx = [n_rows](arma::uword r, arma::uword c) { return c * n_rows + r; };
  if (amp(row0, col0) < level) return;
  std::vector<std::pair<arma::uword, arma::uword>> stack{{row0, col0}};
  in_lobe[idx(row0, col0)] = 1;
  while (!stack.empty()) {
    auto [r, c] = stack.back();
    stack.pop_back();
    const auto visit = [&](arma::uword rr, arma::uword cc) {
      if (!in_lobe[idx(rr, cc)] && amp(rr, cc) >= level) {
        in_lobe[idx(rr, cc)] = 1;
        stack.emplace_back(rr, cc);
      }
    };
    visit((r + n_rows - 1) % n_rows, c);
    visit((r + 1) % n_rows, c);
    if (c > 0) visit(r, c - 1);
    if (c + 1 < n_cols) visit(r, c + 1);
  }
}

}  // namespace

NslResult TxAmbiguityMap::nsl(const arma::mat& eta) const {
  constexpr double kMainLobeLevel = 0.5;  // -3 dB edge of the main lobe
  NslResult result;
  double max_sidelobe = 0.0;
  for (arma::uword i = 0; i < grid_.phi.n_elem; ++i) {
    const arma::mat amp = amplitude_map(eta, i);
    // Anchor at the probe angle closest to the reference angle, delta_nu = 0.
    const arma::uword j0 =
        arma::index_min(arma::abs(grid_.phi_prime - grid_.phi(i)));
    std::vector<char> in_lobe(amp.n_elem, 0);
    flood_fill(amp, kMainLobeLevel, j0, 0, in_lobe);
    for (arma::uword jj = 0; jj < amp.n_rows; ++jj) {
      if (in_lobe[(amp.n_cols - 1) * amp.n_rows + jj]) {
        result.main_lobe_clipped = true;
        break;
      }
    }
    // Sidelobes are local maxima outside the main lobe; the lobe's own
    // skirt below the -3 dB contour decreases monotonically outward and is
    // not a lobe.
    const arma::uword n_rows = amp.n_rows;
    const arma::uword n_cols = amp.n_cols;
    for (arma::uword c = 0; c < n_cols; ++c) {
      for (arma::uword r = 0; r < n_rows; ++r) {
        if (in_lobe[c * n_rows + r]) continue;
        const double v = amp(r, c);
        if (v <= max_sidelobe) continue;
        const bool peak = v >= amp((r + n_rows - 1) % n_rows, c) &&
                          v >= amp((r + 1) % n_rows, c) &&
                          (c == 0 || v >= amp(r, c - 1)) &&
                          (c + 1 == n_cols || v >= amp(r, c + 1));
        if (peak) max_sidelobe = v;
      }
    }
  }
  result.nsl_db = max_sidelobe > 0.0
                      ? amplitude_db(max_sidelobe)
                      : -std::numeric_limits<double>::infinity();
  return result;
}

double cost_f_p(const Eadf& tx_array, const SoundingConfig& config,
                const arma::mat& eta, const AmbiguityGridSpec& grid, int p) {
  return TxAmbiguityMap(tx_array, config, grid).cost_f_p(eta, p);
}

NslResult nsl(const Eadf& tx_array, const SoundingConfig& config,
              const arma::mat& eta, const AmbiguityGridSpec& grid) {
  return TxAmbiguityMap(tx_array, config, grid).nsl(eta);
}

}  // namespace soundseq
