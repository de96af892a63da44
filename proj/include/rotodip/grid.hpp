#pragma once

#include <cmath>
#include <cstddef>

#include "rotodip/errors.hpp"

namespace rotodip {

/// Uniform cubic grid for the field solver. Storage layout: x fastest,
/// idx = ix + n*(iy + n*iz); coordinates are cell-centered on the origin,
/// x(i) = (i - n/2) d.
struct SimGrid {
  int n = 64;        ///< points per axis (even)
  double d = 0.15;   ///< spacing, l_perp
  double r_c = 0.0;  ///< DDI cutoff radius, l_perp; 0 selects 0.45 * box length

  double length() const { return n * d; }
  double coord(int i) const { return (i - n / 2) * d; }
  /// Angular wavenumber of FFT bin j.
  double kfreq(int j) const {
    const int jj = j <= n / 2 ? j : j - n;
    return 2.0 * 3.14159265358979323846 * jj / (n * d);
  }
  double cutoff() const { return r_c > 0.0 ? r_c : 0.45 * length(); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t idx(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(n) * (static_cast<std::size_t>(iy) +
                                          static_cast<std::size_t>(n) * iz);
  }

  void validate() const {
    if (n < 8 || n % 2 != 0) throw DomainError("SimGrid: n must be even and >= 8");
    if (!(d > 0.0)) throw DomainError("SimGrid: spacing must be positive");
    if (r_c < 0.0 || r_c > 0.5 * length())
      throw DomainError("SimGrid: cutoff must lie in (0, L/2]");
  }
};

}  // namespace rotodip
