#pragma once

#include <cmath>

#include "rotodip/errors.hpp"
#include "rotodip/quadrature.hpp"

namespace rotodip {

/// Index triple of the anisotropy integral beta_ijk.
struct BetaIndex {
  int i = 0, j = 0, k = 0;
  int total() const { return i + j + k; }
};

/// beta_ijk(kx, ky) = int_0^inf ds (s+kx^2)^{-i-1/2} (s+ky^2)^{-j-1/2} (s+1)^{-k-1/2}.
///
/// Evaluated after the substitution s = tan^2(theta), which maps the
/// half-line onto [0, pi/2) and removes the algebraic tail analytically:
///   integrand(theta) = 2 sin(theta) cos(theta)^{2(i+j+k)}
///                      (sin^2 + kx^2 cos^2)^{-i-1/2} (sin^2 + ky^2 cos^2)^{-j-1/2}.
/// At kx = ky = 1 this reduces to the closed form 1/(i+j+k+1/2).
inline double beta_integral(BetaIndex idx, double kx, double ky, double rel_tol = 1e-13) {
  if (!(kx > 0.0) || !(ky > 0.0)) throw DomainError("beta_integral: kappa must be positive");
  if (idx.i < 0 || idx.j < 0 || idx.k < 0) throw DomainError("beta_integral: negative index");
  const double ex = -(idx.i + 0.5);
  const double ey = -(idx.j + 0.5);
  const int two_n = 2 * idx.total();
  const double kx2 = kx * kx, ky2 = ky * ky;
  auto integrand = [=](double th) {
    const double s = std::sin(th), c = std::cos(th);
    const double s2 = s * s, c2 = c * c;
    return 2.0 * s * std::pow(c, two_n) * std::pow(s2 + kx2 * c2, ex) *
           std::pow(s2 + ky2 * c2, ey);
  };
  QuadOptions opt;
  opt.rel_tol = rel_tol;
  return integrate(integrand, 0.0, std::asin(1.0), opt);
}

namespace special_detail {

/// f(kappa)/(1 - kappa^2) with the removable singularity at kappa = 1 handled
/// by the series sum_{m>=1} 6 e^{m-1} / ((2m+1)(2m+3)), e = 1 - kappa^2.
inline double f_over_one_minus_k2(double kappa) {
  const double c = kappa * kappa;
  const double e = 1.0 - c;
  if (std::abs(e) < 1e-5) {
    // |e| < 1e-5: four terms leave a relative error below 1e-20.
    return 6.0 * (1.0 / 15.0 + e * (1.0 / 35.0 + e * (1.0 / 63.0 + e / 99.0)));
  }
  double t;  // atanh(sqrt(e))/sqrt(e), continued through e < 0 as atan
  if (e > 0.0) {
    const double r = std::sqrt(e);
    t = std::atanh(r) / r;
  } else {
    const double r = std::sqrt(-e);
    t = std::atan(r) / r;
  }
  return (1.0 + 2.0 * c - 3.0 * c * t) / (e * e);
}

}  // namespace special_detail

/// Dipolar anisotropy function
///   f(k) = (1+2k^2)/(1-k^2) - 3k^2 artanh(sqrt(1-k^2)) / (1-k^2)^{3/2},
/// continuous across k = 1 (value 0) and continued for k > 1 with the
/// inverse-circular branch. Monotonically decreasing, f(0+) = 1, f(inf) = -2.
inline double f_kappa(double kappa) {
  if (!(kappa > 0.0)) throw DomainError("f_kappa: kappa must be positive");
  const double e = 1.0 - kappa * kappa;
  return e * special_detail::f_over_one_minus_k2(kappa);
}

}  // namespace rotodip
