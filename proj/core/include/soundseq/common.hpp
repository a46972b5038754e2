#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace soundseq {

using cx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr cx j_unit{0.0, 1.0};

// Thrown when an input violates a documented precondition. The CLI maps this
// to exit code 1. Messages name the offending field and the constraint.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation fails numerically (degenerate array, singular
// system without a usable fallback). The CLI maps this to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double phi) {
  double w = std::remainder(phi, two_pi);
  if (w <= -pi) w += two_pi;
  return w;
}

inline double deg_to_rad(double deg) { return deg * (pi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / pi); }

// Power ratios.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
// Amplitude ratios.
inline double amplitude_db(double amp) { return 20.0 * std::log10(amp); }

// Deterministic pairwise (cascade) summation. Summation order depends only on
// the element order of `values`, so results are bit-reproducible no matter how
// the buffer was filled.
double pairwise_sum(std::span<const double> values);

}  // namespace soundseq
