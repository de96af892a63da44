#pragma once

#include <cmath>
#include <vector>

#include "rotodip/grid.hpp"

namespace rotodip {

/// Reciprocal-space table of the spherically truncated dipolar interaction
/// for dipoles along x. Stores the eps_dd-independent factor
///   g~ * [1 + 3 cos(R_c k)/(R_c k)^2 - 3 sin(R_c k)/(R_c k)^3] * (3 kx^2/k^2 - 1)
/// on the half-spectrum r2c layout (kx index 0..n/2 fastest); the k = 0 entry
/// carries the analytic limit 0. Multiply by the current eps_dd at use.
class DdiKernel {
 public:
  DdiKernel(const SimGrid& grid, double g_scale)
      : n_(grid.n), r_c_(grid.cutoff()) {
    const int nh = n_ / 2 + 1;
    table_.resize(static_cast<std::size_t>(n_) * n_ * nh);
    for (int iz = 0; iz < n_; ++iz) {
      const double kz = grid.kfreq(iz);
      for (int iy = 0; iy < n_; ++iy) {
        const double ky = grid.kfreq(iy);
        for (int ix = 0; ix < nh; ++ix) {
          const double kx = grid.kfreq(ix);
          const double k2 = kx * kx + ky * ky + kz * kz;
          const std::size_t id =
              static_cast<std::size_t>(ix) +
              static_cast<std::size_t>(nh) * (iy + static_cast<std::size_t>(n_) * iz);
          if (k2 == 0.0) {
            table_[id] = 0.0;
            continue;
          }
          const double angular = 3.0 * kx * kx / k2 - 1.0;
          table_[id] = g_scale * cutoff_bracket(r_c_ * std::sqrt(k2)) * angular;
        }
      }
    }
  }

  double r_c() const { return r_c_; }
  const std::vector<double>& table() const { return table_; }

  /// [1 + 3 cos(u)/u^2 - 3 sin(u)/u^3]; tends to 1 as u -> inf and to
  /// u^2/10 - u^4/280 as u -> 0.
  static double cutoff_bracket(double u) {
    if (u < 1e-2) {
      const double u2 = u * u;
      return u2 / 10.0 - u2 * u2 / 280.0;
    }
    return 1.0 + 3.0 * std::cos(u) / (u * u) - 3.0 * std::sin(u) / (u * u * u);
  }

 private:
  int n_;
  double r_c_;
  std::vector<double> table_;
};

}  // namespace rotodip
