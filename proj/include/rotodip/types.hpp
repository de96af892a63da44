#pragma once

#include "rotodip/errors.hpp"

namespace rotodip {

/// Physical configuration in oscillator units (hbar = m = omega_perp = 1,
/// lengths in l_perp = sqrt(hbar/(m omega_perp))).
struct SystemParams {
  double gamma = 1.0;   ///< trap aspect ratio omega_z / omega_perp, > 0
  double omega = 0.0;   ///< polarization rotation rate, units of omega_perp, >= 0
  double eps_dd = 0.0;  ///< dipolar ratio C_dd / (3 g), in [0, 1) for solver entry points
  /// Contact coupling g~ = 4 pi a_s N / l_perp. Densities are normalized to
  /// unit norm throughout; the particle number enters only through g~.
  double interaction_scale = 200.0;

  void validate() const {
    if (!(gamma > 0.0)) throw DomainError("SystemParams: gamma must be > 0");
    if (!(omega >= 0.0)) throw DomainError("SystemParams: omega must be >= 0");
    if (!(eps_dd >= 0.0 && eps_dd < 1.0))
      throw DomainError("SystemParams: eps_dd must lie in [0, 1)");
    if (!(interaction_scale >= 0.0))
      throw DomainError("SystemParams: interaction_scale must be >= 0");
  }
};

/// A stationary Thomas-Fermi state.
struct TFState {
  double kappa_x = 1.0;  ///< R_x / R_z
  double kappa_y = 1.0;  ///< R_y / R_z
  double alpha = 0.0;    ///< quadrupolar velocity amplitude, units omega_perp
  double r_z = 0.0;      ///< TF radius along z, units l_perp
  double n0 = 0.0;       ///< peak density for unit norm, 1 / l_perp^3
  double mu = 0.0;       ///< chemical potential, units hbar omega_perp
};

}  // namespace rotodip
