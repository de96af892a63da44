#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <complex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rotodip/eig.hpp"
#include "rotodip/poly.hpp"
#include "rotodip/potential.hpp"
#include "rotodip/solver.hpp"

namespace rotodip {

/// Real parts below this threshold are clamped to zero when reporting the
/// dominant growth rate (roundoff floor of the dense eigensolve).
inline constexpr double kLambdaClamp = 1e-8;

struct StabilitySpectrum {
  std::vector<std::complex<double>> eigenvalues;  ///< units omega_perp, unclamped
  std::vector<int> mode_order;  ///< attributed polynomial order per eigenvalue (with vectors)
  double lambda0 = 0.0;         ///< max real part, clamped at zero from below
  int n_max = 0;
  SystemParams params;
  TFState tf;
};

/// Matrix of the linearized phase/density evolution operator over the scaled
/// monomial basis, block layout [dS; dn], size 2B x 2B.
///
/// In coordinates X = x/R_x, Y = y/R_y, Z = z/R_z and with the density
/// component rescaled so that both couplings carry c = gamma/sqrt(2 zeta):
///   d/dt dS = A dS - c (1 + eps K) dn
///   d/dt dn = -c sum_i kappa_i^{-2} d_i((1-|X|^2) d_i dS) + A dn
/// where A = -[(alpha+Omega)(ky/kx) Y d_X + (alpha-Omega)(kx/ky) X d_Y].
/// Every block maps total degree d into degrees <= d, so the truncated space
/// is exactly invariant.
inline Eigen::MatrixXd assemble_L(const TFState& tf, const SystemParams& p,
                                  const PolyBasis& basis,
                                  const BallPotentialTable* table = nullptr) {
  p.validate();
  {
    const auto r = consistency_residuals(tf.kappa_x, tf.kappa_y, tf.alpha, p);
    if (!(r.max_abs() <= 1e-8))
      throw PreconditionError("assemble_L: state does not solve the consistency relations "
                              "(max residual " + std::to_string(r.max_abs()) + ")");
  }
  const double kx = tf.kappa_x, ky = tf.kappa_y, al = tf.alpha, om = p.omega;
  const double z = zeta(kx, ky, p.eps_dd);
  const double c = p.gamma / std::sqrt(2.0 * z);

  std::optional<BallPotentialTable> own_table;
  if (table == nullptr) {
    own_table.emplace(kx, ky, basis.n_max);
    table = &*own_table;
  }
  if (table->max_degree() < basis.n_max ||
      std::abs(table->kappa_x() - kx) > 1e-12 || std::abs(table->kappa_y() - ky) > 1e-12)
    throw PreconditionError("assemble_L: potential table does not match the state");

  const std::size_t B = basis.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * B, 2 * B);

  auto scatter = [&](const Poly3& poly, std::size_t row0, std::size_t col, double scale) {
    for (const auto& [k, v] : poly.terms()) {
      const int idx = basis.index_of(k[0], k[1], k[2]);
      if (idx < 0)
        throw NumericError("assemble_L: operator left the truncated space");
      M(row0 + idx, col) += scale * v;
    }
  };

  for (std::size_t j = 0; j < B; ++j) {
    const auto [pp, qq, rr] = basis.monomials[j];
    // advection A on both diagonal blocks
    if (pp > 0) {
      const double cxy = -(al + om) * (ky / kx) * pp;
      const int idx = basis.index_of(pp - 1, qq + 1, rr);
      M(idx, j) += cxy;
      M(B + idx, B + j) += cxy;
    }
    if (qq > 0) {
      const double cyx = -(al - om) * (kx / ky) * qq;
      const int idx = basis.index_of(pp + 1, qq - 1, rr);
      M(idx, j) += cyx;
      M(B + idx, B + j) += cyx;
    }
    // dn -> dS coupling: -c (1 + eps K)
    {
      Poly3 b = table->k_op(Poly3::monomial(pp, qq, rr));
      b *= p.eps_dd;
      b.add(pp, qq, rr, 1.0);
      scatter(b, 0, B + j, -c);
    }
    // dS -> dn coupling: -c sum_i kappa_i^{-2} [ -2 X_i d_i + (1-|X|^2) d_i^2 ]
    {
      const double k2[3] = {kx * kx, ky * ky, 1.0};
      const int e[3] = {pp, qq, rr};
      Poly3 cpoly;
      for (int axis = 0; axis < 3; ++axis) {
        const double inv = 1.0 / k2[axis];
        if (e[axis] >= 1) cpoly.add(pp, qq, rr, -2.0 * e[axis] * inv);
        if (e[axis] >= 2) {
          const double dd = e[axis] * (e[axis] - 1) * inv;
          int lower[3] = {pp, qq, rr};
          lower[axis] -= 2;
          cpoly.add(lower[0], lower[1], lower[2], dd);
          cpoly.add(lower[0] + 2, lower[1], lower[2], -dd);
          cpoly.add(lower[0], lower[1] + 2, lower[2], -dd);
          cpoly.add(lower[0], lower[1], lower[2] + 2, -dd);
        }
      }
      scatter(cpoly, B, j, -c);
    }
  }
  return M;
}

namespace stability_detail {

/// Parity class of a monomial under the couplings of the operator:
/// x and y parities flip together under advection, z parity is conserved.
inline int parity_class(const std::array<int, 3>& m) {
  return ((m[0] + m[1]) % 2) * 2 + (m[2] % 2);
}

}  // namespace stability_detail

/// Dense spectrum of the linearized operator at a stationary state.
/// split_parity exploits the exact block structure over the four parity
/// classes; with_vectors additionally attributes to each eigenvalue the total
/// degree of its largest eigenvector coefficient.
inline StabilitySpectrum spectrum(const TFState& tf, const SystemParams& p, int n_max,
                                  bool with_vectors = false, bool split_parity = true) {
  if (n_max < 2) throw DomainError("spectrum: n_max must be >= 2");
  const PolyBasis basis = PolyBasis::make(n_max);
  const BallPotentialTable table(tf.kappa_x, tf.kappa_y, n_max);
  const Eigen::MatrixXd M = assemble_L(tf, p, basis, &table);
  const std::size_t B = basis.size();

  StabilitySpectrum out;
  out.n_max = n_max;
  out.params = p;
  out.tf = tf;

  auto attribute = [&](const Eigen::VectorXcd& v, const std::vector<std::size_t>& rows) {
    double best = -1.0;
    int order = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double mag = std::abs(v(i));
      if (mag > best) {
        best = mag;
        const auto& m = basis.monomials[rows[i] % B];
        order = m[0] + m[1] + m[2];
      }
    }
    return order;
  };

  if (!split_parity) {
    auto r = eig_nonsymmetric(M, with_vectors);
    out.eigenvalues = std::move(r.values);
    if (with_vectors) {
      std::vector<std::size_t> rows(2 * B);
      for (std::size_t i = 0; i < 2 * B; ++i) rows[i] = i;
      for (std::size_t j = 0; j < out.eigenvalues.size(); ++j)
        out.mode_order.push_back(attribute(r.vectors.col(j), rows));
    }
  } else {
    for (int cls = 0; cls < 4; ++cls) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < B; ++i)
        if (stability_detail::parity_class(basis.monomials[i]) == cls) rows.push_back(i);
      if (rows.empty()) continue;
      std::vector<std::size_t> both = rows;
      for (std::size_t i : rows) both.push_back(B + i);
      Eigen::MatrixXd sub(both.size(), both.size());
      for (std::size_t a = 0; a < both.size(); ++a)
        for (std::size_t b = 0; b < both.size(); ++b) sub(a, b) = M(both[a], both[b]);
      auto r = eig_nonsymmetric(sub, with_vectors);
      for (std::size_t j = 0; j < r.values.size(); ++j) {
        out.eigenvalues.push_back(r.values[j]);
        if (with_vectors) out.mode_order.push_back(attribute(r.vectors.col(j), both));
      }
    }
  }

  double max_re = -1e300;
  for (const auto& ev : out.eigenvalues) max_re = std::max(max_re, ev.real());
  out.lambda0 = max_re <= kLambdaClamp ? 0.0 : max_re;
  return out;
}

struct MapEntry {
  double omega = 0.0, eps_dd = 0.0, gamma = 1.0;
  int n_max = 0;
  double lambda0 = 0.0, lambda0_quarter = 0.0;
  int n_eigs = 0;
  double kappa_x = 0.0, kappa_y = 0.0, alpha = 0.0;
  bool ok = false;
  std::string error;  ///< empty on success
};

/// Instability map over an (Omega, eps_dd) grid at fixed gamma. Each Omega
/// row is continued in eps_dd from the symmetric eps_dd = 0 solution, reusing
/// the previous solution as the next seed; rows run concurrently. Per-point
/// failures are recorded and never abort the sweep.
inline std::vector<MapEntry> stability_map(const std::vector<double>& omegas,
                                           const std::vector<double>& eps_grid, double gamma,
                                           int n_max, int threads = 1) {
  if (omegas.empty() || eps_grid.empty())
    throw DomainError("stability_map: grids must be nonempty");
  std::vector<MapEntry> entries(omegas.size() * eps_grid.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t row = next.fetch_add(1); row < omegas.size(); row = next.fetch_add(1)) {
      SystemParams p;
      p.gamma = gamma;
      p.omega = omegas[row];
      p.eps_dd = 0.0;
      TFState state{};
      double state_eps = 0.0;
      bool have_state = false;
      try {
        state = symmetric_state_eps0(p);
        have_state = true;
      } catch (const Error&) {
      }
      for (std::size_t col = 0; col < eps_grid.size(); ++col) {
        MapEntry& e = entries[row * eps_grid.size() + col];
        e.omega = omegas[row];
        e.eps_dd = eps_grid[col];
        e.gamma = gamma;
        e.n_max = n_max;
        if (!have_state) {
          e.error = "no seed state";
          continue;
        }
        try {
          SystemParams q = p;
          q.eps_dd = eps_grid[col];
          state = continue_in_eps(q, state, state_eps);
          state_eps = eps_grid[col];
          const auto spec = spectrum(state, q, n_max, false, true);
          e.lambda0 = spec.lambda0;
          e.lambda0_quarter = std::pow(spec.lambda0, 0.25);
          e.n_eigs = static_cast<int>(spec.eigenvalues.size());
          e.kappa_x = state.kappa_x;
          e.kappa_y = state.kappa_y;
          e.alpha = state.alpha;
          e.ok = true;
        } catch (const Error& err) {
          e.error = err.what();
          have_state = false;  // the continued branch is lost for this row
        }
      }
    }
  };

  const int nt = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return entries;
}

/// Growth timescale in rotation cycles, Omega/(2 pi lambda0); no finite
/// timescale when lambda0 <= 0 (dynamically stable point).
inline std::optional<double> instability_timescale(double lambda0, double omega) {
  if (!(lambda0 > 0.0)) return std::nullopt;
  const double pi = 4.0 * std::atan(1.0);
  return omega / (2.0 * pi * lambda0);
}

}  // namespace rotodip
