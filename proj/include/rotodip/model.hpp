#pragma once

#include <array>
#include <cmath>

#include "rotodip/special.hpp"
#include "rotodip/types.hpp"

namespace rotodip {

/// Dressed in-plane trap frequencies squared, (wx~^2, wy~^2) in omega_perp^2:
///   wx~^2 = 1 + alpha^2 - 2 alpha Omega,  wy~^2 = 1 + alpha^2 + 2 alpha Omega.
/// May be negative; callers decide validity.
inline std::array<double, 2> dressed_frequencies(double alpha, double omega) {
  const double a2 = alpha * alpha;
  return {1.0 + a2 - 2.0 * alpha * omega, 1.0 + a2 + 2.0 * alpha * omega};
}

/// zeta = 1 + eps_dd (3/2 kx ky beta_101 - 1).
inline double zeta(double kx, double ky, double eps_dd, double quad_tol = 1e-13) {
  return 1.0 + eps_dd * (1.5 * kx * ky * beta_integral({1, 0, 1}, kx, ky, quad_tol) - 1.0);
}

struct TFClosure {
  double r_z;  ///< l_perp
  double n0;   ///< 1 / l_perp^3, unit norm
  double mu;   ///< hbar omega_perp
};

/// Closes the TF state for given aspect ratios: solves
///   R_z^2 = 2 g~ n0 zeta / gamma^2   together with   n0 = 15/(8 pi kx ky R_z^3)
/// and matches the constant coefficient of the stationarity condition for
///   mu = g~ n0 [(1 - eps_dd) + (3/2) eps_dd kx ky beta_100].
inline TFClosure tf_radius_and_mu(double kx, double ky, const SystemParams& p,
                                  double quad_tol = 1e-13) {
  p.validate();
  if (!(p.interaction_scale > 0.0))
    throw DomainError("tf_radius_and_mu: interaction_scale must be > 0");
  if (!(kx > 0.0) || !(ky > 0.0)) throw DomainError("tf_radius_and_mu: kappa must be positive");
  const double z = zeta(kx, ky, p.eps_dd, quad_tol);
  if (!(z > 0.0))
    throw UnstableRegimeError("tf_radius_and_mu: zeta <= 0 (dipolar collapse regime)");
  const double pi = 4.0 * std::atan(1.0);
  const double g = p.interaction_scale;
  const double rz5 = 15.0 * g * z / (4.0 * pi * p.gamma * p.gamma * kx * ky);
  const double r_z = std::pow(rz5, 0.2);
  const double n0 = 15.0 / (8.0 * pi * kx * ky * r_z * r_z * r_z);
  const double b100 = beta_integral({1, 0, 0}, kx, ky, quad_tol);
  const double mu = g * n0 * ((1.0 - p.eps_dd) + 1.5 * p.eps_dd * kx * ky * b100);
  return {r_z, n0, mu};
}

/// TF density n(r) = n0 max(0, 1 - x^2/(kx R_z)^2 - y^2/(ky R_z)^2 - z^2/R_z^2).
inline double tf_density(const TFState& s, double x, double y, double z) {
  const double rx = s.kappa_x * s.r_z, ry = s.kappa_y * s.r_z;
  const double m2 = (x * x) / (rx * rx) + (y * y) / (ry * ry) + (z * z) / (s.r_z * s.r_z);
  return m2 >= 1.0 ? 0.0 : s.n0 * (1.0 - m2);
}

}  // namespace rotodip
