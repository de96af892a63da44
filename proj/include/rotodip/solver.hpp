#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rotodip/model.hpp"
#include "rotodip/types.hpp"

namespace rotodip {

/// Residuals of the three stationarity consistency relations.
/// r1, r2 are the defects of the kappa_x^2 and kappa_y^2 relations; r3 is the
/// velocity-amplitude relation, which vanishes identically once r1 = r2 = 0
/// and alpha satisfies alpha = Omega (kx^2 - ky^2)/(kx^2 + ky^2).
struct Residuals {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double max_abs() const { return std::max({std::abs(r1), std::abs(r2), std::abs(r3)}); }
};

/// alpha determined by the aspect ratios (continuity equation).
inline double alpha_from_kappas(double kx, double ky, double omega) {
  const double kx2 = kx * kx, ky2 = ky * ky;
  return omega * (kx2 - ky2) / (kx2 + ky2);
}

/// Time-averaged transverse aspect ratio kappa_perp = sqrt(2) (kx^-2 + ky^-2)^(-1/2).
inline double kappa_perp(double kx, double ky) {
  if (!(kx > 0.0) || !(ky > 0.0)) throw DomainError("kappa_perp: kappa must be positive");
  return std::sqrt(2.0 / (1.0 / (kx * kx) + 1.0 / (ky * ky)));
}

namespace solver_detail {

struct Parts {
  double alpha, wx2, wy2, zeta, rhs7, rhs8, bracket_x, bracket_y;
};

inline Parts parts(double kx, double ky, double alpha, const SystemParams& p,
                   double quad_tol = 1e-13) {
  if (!(kx > 0.0) || !(ky > 0.0)) throw DomainError("consistency: kappa must be positive");
  const double eps = p.eps_dd;
  const double g2 = p.gamma * p.gamma;
  const auto [wx2, wy2] = dressed_frequencies(alpha, p.omega);
  const double b200 = beta_integral({2, 0, 0}, kx, ky, quad_tol);
  const double b110 = beta_integral({1, 1, 0}, kx, ky, quad_tol);
  const double z = zeta(kx, ky, eps, quad_tol);
  if (!(z > 0.0)) throw UnstableRegimeError("consistency: zeta <= 0");
  const double rhs7 = g2 / (z * wx2) * (1.0 + eps * (4.5 * kx * kx * kx * ky * b200 - 1.0));
  const double rhs8 = g2 / (z * wy2) * (1.0 + eps * (1.5 * ky * ky * ky * kx * b110 - 1.0));
  // factors multiplying (alpha +- Omega) in the third relation
  const double bx = wx2 - 4.5 * eps * kx * ky * g2 * b200 / z;
  const double by = wy2 - 1.5 * eps * kx * ky * g2 * b110 / z;
  return {alpha, wx2, wy2, z, rhs7, rhs8, bx, by};
}

}  // namespace solver_detail

/// Defects of the consistency relations at (kx, ky, alpha).
inline Residuals consistency_residuals(double kx, double ky, double alpha,
                                       const SystemParams& p, double quad_tol = 1e-13) {
  const auto q = solver_detail::parts(kx, ky, alpha, p, quad_tol);
  Residuals r;
  r.r1 = kx * kx - q.rhs7;
  r.r2 = ky * ky - q.rhs8;
  r.r3 = (alpha + p.omega) * q.bracket_x + (alpha - p.omega) * q.bracket_y;
  return r;
}

struct Seed {
  double kappa_x = 1.0, kappa_y = 1.0;
  double alpha = 0.0;  ///< ignored: alpha is recomputed from the aspect ratios
};

struct SolveOptions {
  double tol = 1e-12;  ///< on scale-normalized residuals |r| / max(1, kappa^2)
  int max_iter = 100;
  double quad_tol = 1e-13;
};

/// Newton solve of the consistency relations with alpha eliminated through
/// the continuity constraint (unknowns log kappa_x, log kappa_y, central
/// finite-difference Jacobian, backtracking damping). Returns the full state
/// including R_z, n0, mu.
namespace solver_detail {
inline TFState solve_consistency_once(const SystemParams& p, Seed seed, const SolveOptions& opt);
}

/// See solve_consistency_once; retries once from the symmetrized seed
/// (geometric-mean aspect ratio) when the first attempt stalls.
inline TFState solve_consistency(const SystemParams& p, Seed seed, const SolveOptions& opt = {}) {
  try {
    return solver_detail::solve_consistency_once(p, seed, opt);
  } catch (const ConvergenceError&) {
    const double km = std::sqrt(seed.kappa_x * seed.kappa_y);
    if (std::abs(std::log(seed.kappa_x / km)) < 1e-12) throw;
    return solver_detail::solve_consistency_once(p, {km, km, 0.0}, opt);
  }
}

namespace solver_detail {

inline TFState solve_consistency_once(const SystemParams& p, Seed seed, const SolveOptions& opt) {
  p.validate();
  if (!(seed.kappa_x > 0.0) || !(seed.kappa_y > 0.0))
    throw DomainError("solve_consistency: seed kappas must be positive");

  auto residual2 = [&](const std::array<double, 2>& u) -> std::array<double, 2> {
    const double kx = std::exp(u[0]), ky = std::exp(u[1]);
    const double al = alpha_from_kappas(kx, ky, p.omega);
    const auto q = solver_detail::parts(kx, ky, al, p, opt.quad_tol);
    return {(kx * kx - q.rhs7) / std::max(1.0, kx * kx),
            (ky * ky - q.rhs8) / std::max(1.0, ky * ky)};
  };
  auto norm2 = [](const std::array<double, 2>& r) {
    return std::sqrt(r[0] * r[0] + r[1] * r[1]);
  };

  std::array<double, 2> u = {std::log(seed.kappa_x), std::log(seed.kappa_y)};
  std::array<double, 2> r{};
  bool valid = false;
  try {
    r = residual2(u);
    valid = true;
  } catch (const Error&) {
  }
  if (!valid) throw ConvergenceError("solve_consistency: seed outside solvable region");

  int it = 0;
  double best_norm = norm2(r);
  int since_best = 0;
  for (; it < opt.max_iter; ++it) {
    if (std::max(std::abs(r[0]), std::abs(r[1])) <= opt.tol) break;
    // stagnation exit: no meaningful progress for a dozen iterations
    if (norm2(r) < 0.7 * best_norm) {
      best_norm = norm2(r);
      since_best = 0;
    } else if (++since_best > 12) {
      throw ConvergenceError("solve_consistency: stagnated, |r|=" + std::to_string(norm2(r)));
    }
    // finite-difference Jacobian
    const double h = 1e-6;
    double J[2][2];
    for (int c = 0; c < 2; ++c) {
      auto up = u, um = u;
      up[c] += h;
      um[c] -= h;
      std::array<double, 2> rp, rm;
      try {
        rp = residual2(up);
        rm = residual2(um);
      } catch (const Error&) {
        throw ConvergenceError("solve_consistency: Jacobian evaluation left solvable region");
      }
      J[0][c] = (rp[0] - rm[0]) / (2.0 * h);
      J[1][c] = (rp[1] - rm[1]) / (2.0 * h);
    }
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double jnorm = std::max({std::abs(J[0][0]), std::abs(J[0][1]), std::abs(J[1][0]),
                                   std::abs(J[1][1]), 1e-30});
    std::array<double, 2> du;
    if (std::abs(det) > 1e-10 * jnorm * jnorm) {
      du = {(-r[0] * J[1][1] + r[1] * J[0][1]) / det,
            (-r[1] * J[0][0] + r[0] * J[1][0]) / det};
    } else {
      // near-singular Jacobian: fall back to scaled steepest descent on |r|^2
      const double g0 = J[0][0] * r[0] + J[1][0] * r[1];
      const double g1 = J[0][1] * r[0] + J[1][1] * r[1];
      const double gn = std::hypot(g0, g1);
      if (!(gn > 0.0)) throw ConvergenceError("solve_consistency: stalled at singular Jacobian");
      const double scale = std::min(0.3, norm2(r) / gn);
      du = {-scale * g0 / gn, -scale * g1 / gn};
    }
    // cap the raw step to keep log-coordinates sane
    const double dmax = std::max(std::abs(du[0]), std::abs(du[1]));
    if (dmax > 1.0) {
      du[0] /= dmax;
      du[1] /= dmax;
    }
    double lambda = 1.0;
    const double r0 = norm2(r);
    bool accepted = false;
    for (int bt = 0; bt < 12; ++bt, lambda *= 0.5) {
      std::array<double, 2> ut = {u[0] + lambda * du[0], u[1] + lambda * du[1]};
      if (std::abs(ut[0]) > 8.0 || std::abs(ut[1]) > 8.0) continue;  // aspect ratio cap e^8
      try {
        auto rt = residual2(ut);
        if (norm2(rt) < r0 || lambda < 1e-3) {
          u = ut;
          r = rt;
          accepted = true;
          break;
        }
      } catch (const Error&) {
        // trial left the solvable region; shrink
      }
    }
    if (!accepted)
      throw ConvergenceError("solve_consistency: line search failed, |r|=" + std::to_string(r0));
  }
  if (std::max(std::abs(r[0]), std::abs(r[1])) > opt.tol)
    throw ConvergenceError("solve_consistency: no convergence in " +
                           std::to_string(opt.max_iter) + " iterations, |r|=" +
                           std::to_string(std::max(std::abs(r[0]), std::abs(r[1]))));

  const double kx = std::exp(u[0]), ky = std::exp(u[1]);
  const double al = alpha_from_kappas(kx, ky, p.omega);
  const auto [wx2, wy2] = dressed_frequencies(al, p.omega);
  if (!(wx2 > 0.0) || !(wy2 > 0.0))
    throw UnstableRegimeError("solve_consistency: dressed frequency squared <= 0 at solution");
  const auto cl = tf_radius_and_mu(kx, ky, p, opt.quad_tol);
  return TFState{kx, ky, al, cl.r_z, cl.n0, cl.mu};
}

}  // namespace solver_detail

/// Exact symmetric stationary state at eps_dd = 0 (kx = ky = gamma, alpha = 0).
inline TFState symmetric_state_eps0(const SystemParams& p) {
  SystemParams q = p;
  q.eps_dd = 0.0;
  const auto cl = tf_radius_and_mu(p.gamma, p.gamma, q);
  return TFState{p.gamma, p.gamma, 0.0, cl.r_z, cl.n0, cl.mu};
}

/// Exact bifurcated state at eps_dd = 0 for Omega in (1/sqrt(2), 1):
/// alpha = sign * sqrt(2 Omega^2 - 1), kx = gamma/wx~, ky = gamma/wy~.
inline TFState bifurcated_state_eps0(const SystemParams& p, int sign) {
  const double disc = 2.0 * p.omega * p.omega - 1.0;
  if (!(disc > 0.0))
    throw DomainError("bifurcated_state_eps0: Omega below the bifurcation point");
  const double al = (sign >= 0 ? 1.0 : -1.0) * std::sqrt(disc);
  const auto [wx2, wy2] = dressed_frequencies(al, p.omega);
  if (!(wx2 > 0.0) || !(wy2 > 0.0))
    throw UnstableRegimeError("bifurcated_state_eps0: branch terminated (Omega >= 1)");
  const double kx = p.gamma / std::sqrt(wx2);
  const double ky = p.gamma / std::sqrt(wy2);
  SystemParams q = p;
  q.eps_dd = 0.0;
  const auto cl = tf_radius_and_mu(kx, ky, q);
  return TFState{kx, ky, al, cl.r_z, cl.n0, cl.mu};
}

/// Continue a state to target eps_dd at fixed Omega, gamma, stepping in eps_dd.
inline TFState continue_in_eps(const SystemParams& target, TFState from, double eps_from,
                               double max_step = 0.025, SolveOptions opt = {}) {
  opt.max_iter = std::min(opt.max_iter, 40);
  SystemParams p = target;
  double eps = eps_from;
  while (std::abs(target.eps_dd - eps) > 1e-15) {
    double step = std::clamp(target.eps_dd - eps, -max_step, max_step);
    for (int attempt = 0;; ++attempt) {
      p.eps_dd = eps + step;
      try {
        from = solve_consistency(p, {from.kappa_x, from.kappa_y}, opt);
        eps += step;
        break;
      } catch (const Error&) {
        step *= 0.5;
        if (attempt >= 18 || std::abs(step) < 1e-8)
          throw ConvergenceError("continue_in_eps: lost branch at eps_dd=" + std::to_string(eps));
      }
    }
  }
  return from;
}

enum class SweepKind { Omega, EpsDd };

struct SweepRange {
  SweepKind kind = SweepKind::Omega;
  double from = 0.0, to = 1.0;
  double step = 0.01;       ///< initial step magnitude
  double min_step = 1e-6;   ///< halving floor near termination
};

struct BranchTermination {
  double sweep_value;
  std::string reason;
};

struct BranchPoint {
  double sweep;
  TFState state;
  double residual_max;  ///< raw max |r| of the consistency relations
};

struct BranchCurve {
  std::string branch_id;
  SweepKind kind = SweepKind::Omega;
  std::vector<BranchPoint> samples;
  std::optional<BranchTermination> termination;
};

/// Natural-parameter continuation with the previous solution as the next
/// seed, step halving near termination, and growth after repeated successes.
/// A branch terminates when a dressed frequency squared tends to zero or the
/// solve fails at the minimum step.
inline BranchCurve continue_branch(const SystemParams& base, const SweepRange& range,
                                   const TFState& seed_state, std::string branch_id = "",
                                   const SolveOptions& opt = {}) {
  BranchCurve curve;
  curve.branch_id = std::move(branch_id);
  curve.kind = range.kind;
  const double dir = range.to >= range.from ? 1.0 : -1.0;

  auto params_at = [&](double v) {
    SystemParams p = base;
    (range.kind == SweepKind::Omega ? p.omega : p.eps_dd) = v;
    return p;
  };
  auto push = [&](double v, const TFState& s) {
    const auto r = consistency_residuals(s.kappa_x, s.kappa_y, s.alpha, params_at(v), opt.quad_tol);
    curve.samples.push_back({v, s, r.max_abs()});
  };

  double v = range.from;
  TFState cur;
  try {
    cur = solve_consistency(params_at(v), {seed_state.kappa_x, seed_state.kappa_y}, opt);
  } catch (const Error& e) {
    throw ConvergenceError(std::string("continue_branch: dead seed: ") + e.what());
  }
  push(v, cur);

  const double wfloor = 1e-4;  // dressed frequency^2 floor treated as branch end
  double h = std::abs(range.step);
  int streak = 0;
  while (dir * (range.to - v) > 1e-14) {
    h = std::min(h, std::abs(range.to - v));
    const double vt = v + dir * h;
    bool ok = false;
    TFState next;
    try {
      // linear predictor from the last two samples
      Seed s{cur.kappa_x, cur.kappa_y};
      double pred_move = 0.0;  // predictor displacement in log coordinates
      if (curve.samples.size() >= 2) {
        const auto& a = curve.samples[curve.samples.size() - 2];
        const auto& b = curve.samples.back();
        const double w = (vt - b.sweep) / (b.sweep - a.sweep + 1e-300);
        s.kappa_x = std::max(1e-8, b.state.kappa_x + w * (b.state.kappa_x - a.state.kappa_x));
        s.kappa_y = std::max(1e-8, b.state.kappa_y + w * (b.state.kappa_y - a.state.kappa_y));
        pred_move = std::max(std::abs(std::log(s.kappa_x / b.state.kappa_x)),
                             std::abs(std::log(s.kappa_y / b.state.kappa_y)));
      }
      next = solve_consistency(params_at(vt), s, opt);
      const auto [wx2, wy2] = dressed_frequencies(next.alpha, params_at(vt).omega);
      // reject solutions discontinuous from the predictor (branch jumps)
      const double corr = std::max(std::abs(std::log(next.kappa_x / s.kappa_x)),
                                   std::abs(std::log(next.kappa_y / s.kappa_y)));
      const bool coherent = corr <= 0.25 + 4.0 * pred_move;
      ok = coherent && wx2 > wfloor && wy2 > wfloor;
      if (ok) {
        v = vt;
        cur = next;
        push(v, cur);
        if (++streak >= 3) {
          h = std::min(h * 1.6, std::abs(range.step));
          streak = 0;
        }
        continue;
      }
    } catch (const Error&) {
    }
    streak = 0;
    h *= 0.5;
    if (h < range.min_step) {
      // extrapolate the vanishing dressed frequency to locate the terminus
      double term = v;
      std::string reason = "solve failed at minimum step";
      if (curve.samples.size() >= 2) {
        const auto& a = curve.samples[curve.samples.size() - 2];
        const auto& b = curve.samples.back();
        const auto wa = dressed_frequencies(a.state.alpha, params_at(a.sweep).omega);
        const auto wb = dressed_frequencies(b.state.alpha, params_at(b.sweep).omega);
        for (int c = 0; c < 2; ++c) {
          const double slope = (wb[c] - wa[c]) / (b.sweep - a.sweep + 1e-300);
          if (std::abs(slope) > 1e-12 && wb[c] > 0 && dir * slope < 0) {
            const double hit = b.sweep - wb[c] / slope;
            if (dir * (hit - b.sweep) >= 0 && std::abs(hit - b.sweep) < 0.05) {
              term = hit;
              reason = c == 0 ? "dressed omega_x^2 -> 0" : "dressed omega_y^2 -> 0";
            }
          }
        }
      }
      curve.termination = BranchTermination{term, reason};
      break;
    }
  }
  return curve;
}

/// Bisection for the rotation rate where the bifurcated solution pair
/// appears (alpha < 0 pair for eps_dd > 0; alpha != 0 pair at eps_dd = 0).
/// Scans Omega in [0.5, 1); returns nullopt if no pair is found there.
inline std::optional<double> find_bifurcation(double eps_dd, double gamma, double tol = 1e-6) {
  SystemParams p;
  p.gamma = gamma;
  p.eps_dd = eps_dd;
  const double alpha_floor = -1e-7;  // alpha below this counts as pair member

  // anchor seeds for the pair, refreshed after every successful probe
  TFState anchor_a{}, anchor_b{};
  bool have_anchor = false;

  SolveOptions popt;
  popt.max_iter = 40;

  auto probe = [&](double omega) -> bool {
    SystemParams q = p;
    q.omega = omega;
    std::vector<Seed> seeds;
    if (have_anchor) {
      seeds.push_back({anchor_a.kappa_x, anchor_a.kappa_y});
      seeds.push_back({anchor_b.kappa_x, anchor_b.kappa_y});
      seeds.push_back({0.5 * (anchor_a.kappa_x + anchor_b.kappa_x),
                       0.5 * (anchor_a.kappa_y + anchor_b.kappa_y)});
    }
    // seeds from the eps_dd = 0 exact branches continued in eps_dd
    if (2.0 * omega * omega - 1.0 > 1e-12) {
      try {
        SystemParams e0 = q;
        e0.eps_dd = 0.0;
        TFState lower = bifurcated_state_eps0(e0, -1);
        if (eps_dd > 0.0) lower = continue_in_eps(q, lower, 0.0);
        seeds.push_back({lower.kappa_x, lower.kappa_y});
      } catch (const Error&) {
      }
    }
    if (eps_dd > 0.0) {
      try {
        TFState upper = continue_in_eps(q, symmetric_state_eps0(q), 0.0);
        if (upper.alpha < alpha_floor) seeds.push_back({upper.kappa_x, upper.kappa_y});
      } catch (const Error&) {
      }
    }
    std::vector<TFState> found;
    for (const auto& s : seeds) {
      try {
        TFState st = solve_consistency(q, s, popt);
        const bool member = eps_dd > 0.0 ? (st.alpha < alpha_floor)
                                         : (std::abs(st.alpha) > 1e-7);
        if (member) found.push_back(st);
      } catch (const Error&) {
      }
    }
    if (found.empty()) return false;
    anchor_a = found.front();
    anchor_b = found.back();
    have_anchor = true;
    return true;
  };

  double hi = 0.0;
  bool found_hi = false;
  for (double w : {0.98, 0.95, 0.9, 0.99, 0.995}) {
    if (probe(w)) {
      hi = w;
      found_hi = true;
      break;
    }
  }
  if (!found_hi) return std::nullopt;
  double lo = 0.5;
  if (probe(lo)) return lo;  // pair exists across the whole window
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Aspect ratio of the cylindrically symmetric TF state with a z-polarized
/// dipolar coupling of relative strength eps_eff (may be negative): root of
///   3 eps k^2 [(1 + gamma^2/2) f(k)/(1-k^2) - 1] + (eps - 1)(k^2 - gamma^2) = 0,
/// bracketed in (1e-4, 1e4) and polished to 1e-10.
inline std::optional<double> time_averaged_kappa(double eps_eff, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("time_averaged_kappa: gamma must be positive");
  if (eps_eff == 0.0) return gamma;
  auto G = [&](double k) {
    const double fq = special_detail::f_over_one_minus_k2(k);
    const double k2 = k * k;
    return 3.0 * eps_eff * k2 * ((1.0 + 0.5 * gamma * gamma) * fq - 1.0) +
           (eps_eff - 1.0) * (k2 - gamma * gamma);
  };
  // expanding geometric scan outward from gamma
  const double lo_lim = 1e-4, hi_lim = 1e4;
  double a = gamma, fa = G(a);
  double bracket_lo = 0, bracket_hi = 0;
  bool found = false;
  double up = gamma, dn = gamma, fup = fa, fdn = fa;
  for (int i = 0; i < 400 && !found; ++i) {
    const double up2 = std::min(up * 1.05, hi_lim);
    const double f2 = G(up2);
    if (fup == 0.0 || fup * f2 < 0.0) {
      bracket_lo = up;
      bracket_hi = up2;
      found = true;
      break;
    }
    up = up2;
    fup = f2;
    const double dn2 = std::max(dn / 1.05, lo_lim);
    const double f3 = G(dn2);
    if (fdn * f3 < 0.0) {
      bracket_lo = dn2;
      bracket_hi = dn;
      found = true;
      break;
    }
    dn = dn2;
    fdn = f3;
    if (up >= hi_lim && dn <= lo_lim) break;
  }
  if (!found) return std::nullopt;
  // bisection + secant polish
  double lo = bracket_lo, hi = bracket_hi;
  double flo = G(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = G(mid);
    if (flo * fm <= 0.0)
      hi = mid;
    else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rotodip
