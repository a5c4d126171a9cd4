#pragma once

#include <array>
#include <cmath>

namespace tradenet {

// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q + k)^-s and its derivative in s, for
// s > 1 and q ≥ 1, via Euler–Maclaurin summation. Relative accuracy is close
// to double precision over the range used by the fitters (1 < s ≤ 60).
struct ZetaValue {
  double value;
  double d_ds;
};

namespace detail {

// B_2j / (2j)!
inline constexpr std::array<double, 10> kBernoulliOverFactorial = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
};

// Shift so the asymptotic expansion starts at q + N ≥ kShift.
inline constexpr double kShift = 12.0;

}  // namespace detail

inline ZetaValue hurwitz_zeta_with_derivative(double s, double q) {
  double value = 0.0;
  double d_ds = 0.0;
  double a = q;
  while (a < detail::kShift) {
    const double term = std::pow(a, -s);
    value += term;
    d_ds -= std::log(a) * term;
    a += 1.0;
  }

  const double log_a = std::log(a);
  const double a_pow = std::pow(a, -s);  // a^-s
  const double tail_int = a * a_pow / (s - 1.0);
  value += tail_int + 0.5 * a_pow;
  d_ds += -log_a * tail_int - tail_int / (s - 1.0) - 0.5 * log_a * a_pow;

  // Σ_j C_j · P_j(s) · a^(-s-2j+1) with P_j(s) = s(s+1)…(s+2j-2).
  const double inv_a2 = 1.0 / (a * a);
  double power = a_pow / a;  // a^(-s-1)
  double poly = s;           // P_1
  double poly_log_deriv = 1.0 / s;
  for (std::size_t j = 0; j < detail::kBernoulliOverFactorial.size(); ++j) {
    const double c = detail::kBernoulliOverFactorial[j];
    const double term = c * poly * power;
    value += term;
    d_ds += term * (poly_log_deriv - log_a);
    if (std::abs(term) < 1e-18 * std::abs(value)) break;
    const double k = 2.0 * static_cast<double>(j) + 1.0;
    poly *= (s + k) * (s + k + 1.0);
    poly_log_deriv += 1.0 / (s + k) + 1.0 / (s + k + 1.0);
    power *= inv_a2;
  }
  return {value, d_ds};
}

inline double hurwitz_zeta(double s, double q) {
  return hurwitz_zeta_with_derivative(s, q).value;
}

}  // namespace tradenet
