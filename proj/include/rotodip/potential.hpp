#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "rotodip/poly.hpp"
#include "rotodip/special.hpp"

namespace rotodip {

/// Interior potentials of polynomial densities over the unit ball in per-axis
/// scaled coordinates X = x/R_x, Y = y/R_y, Z = z/R_z.
///
/// For a density rho(S) supported on the ellipsoid, the scaled potential
///   Phi[rho](X) = (1/(4 pi R_z^2)) int rho(s) / |x - s| d^3 s
/// is a polynomial of degree deg(rho) + 2 inside the ellipsoid. The table is
/// built from the family of translated-paraboloid densities
///   (1 - |S - B|^2)^k,  whose potentials are
///   (kx ky / (4(k+1))) int_0^inf dchi / D(chi) (1 - sum_i w_i(chi) (X_i-B_i)^2)^{k+1},
/// with w_i = kappa_i^2/(kappa_i^2 + chi) and D = sqrt(prod (kappa_i^2+chi)).
/// Differentiating in B at B = 0 spans all polynomial densities; the
/// one-dimensional chi integrals reduce to beta integrals.
class BallPotentialTable {
 public:
  static constexpr int kMaxSupportedDegree = 24;

  BallPotentialTable(double kappa_x, double kappa_y, int max_degree, double quad_tol = 1e-13)
      : kx_(kappa_x), ky_(kappa_y), dmax_(max_degree), basis_(PolyBasis::make(std::max(0, max_degree))) {
    if (!(kappa_x > 0.0) || !(kappa_y > 0.0))
      throw DomainError("BallPotentialTable: kappa must be positive");
    if (max_degree < 0 || max_degree > kMaxSupportedDegree)
      throw CapabilityError("BallPotentialTable: unsupported density degree " +
                            std::to_string(max_degree));
    build(quad_tol);
  }

  int max_degree() const { return dmax_; }
  double kappa_x() const { return kx_; }
  double kappa_y() const { return ky_; }

  /// Scaled potential of the monomial density X^p Y^q Z^r.
  const Poly3& potential(int p, int q, int r) const {
    const int idx = basis_.index_of(p, q, r);
    if (idx < 0)
      throw CapabilityError("BallPotentialTable: density degree above table maximum");
    return psi_[static_cast<std::size_t>(idx)];
  }

  /// Scaled potential of an arbitrary polynomial density.
  Poly3 potential_of(const Poly3& density) const {
    Poly3 out;
    for (const auto& [k, v] : density.terms()) {
      Poly3 term = potential(k[0], k[1], k[2]);
      term *= v;
      out += term;
    }
    return out;
  }

  /// K operator in scaled coordinates:
  ///   K[rho] = -(3/kappa_x^2) d^2/dX^2 Phi[rho] - rho.
  Poly3 k_op(const Poly3& density) const {
    Poly3 out = potential_of(density).derivative(0).derivative(0);
    out *= -3.0 / (kx_ * kx_);
    out -= density;
    return out;
  }

 private:
  using LD = long double;

  void build(double quad_tol) {
    const int kmax = dmax_ + 1;
    // factorials up to 2(dmax+1); exact in long double for the degrees we cap at
    std::vector<LD> fact(2 * kmax + 2, 1.0L);
    for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<LD>(i);
    auto fallfac = [&](int two_t, int a) -> LD {  // (2t)!/(2t-a)!
      LD v = 1.0L;
      for (int m = two_t - a + 1; m <= two_t; ++m) v *= static_cast<LD>(m);
      return v;
    };

    // beta integrals for all index triples with total <= dmax+1
    const int K = kmax + 1;
    std::vector<double> beta(static_cast<std::size_t>(K) * K * K, 0.0);
    auto bidx = [K](int a, int b, int c) {
      return (static_cast<std::size_t>(a) * K + b) * K + c;
    };
    for (int a = 0; a <= kmax; ++a)
      for (int b = 0; a + b <= kmax; ++b)
        for (int c = 0; a + b + c <= kmax; ++c)
          beta[bidx(a, b, c)] = beta_integral({a, b, c}, kx_, ky_, quad_tol);

    psi_.assign(basis_.size(), Poly3{});

    const LD kxl = static_cast<LD>(kx_), kyl = static_cast<LD>(ky_);
    std::vector<LD> powkx(2 * kmax + 2, 1.0L), powky(2 * kmax + 2, 1.0L);
    for (std::size_t i = 1; i < powkx.size(); ++i) {
      powkx[i] = powkx[i - 1] * kxl;
      powky[i] = powky[i - 1] * kyl;
    }

    // long-double sparse accumulation keyed through the full basis of the
    // output space (degree <= dmax+2)
    const PolyBasis out_basis = PolyBasis::make(dmax_ + 2);

    for (int d = 0; d <= dmax_; ++d) {
      // multi-indices alpha with |alpha| = d, in basis order
      std::vector<std::array<int, 3>> alphas;
      for (const auto& m : basis_.monomials)
        if (m[0] + m[1] + m[2] == d) alphas.push_back(m);
      const int md = static_cast<int>(alphas.size());

      // T coefficients of g_alpha over monomials of degree <= d, and RHS polys
      Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> A(md, md);
      A.setZero();
      Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> B(md, out_basis.size());
      B.setZero();

      for (int col = 0; col < md; ++col) {
        const auto& al = alphas[col];
        // --- g_alpha: compositions t0+t1+t2+t3 = d ---
        for (int t1 = 0; t1 <= d; ++t1)
          for (int t2 = 0; t1 + t2 <= d; ++t2)
            for (int t3 = 0; t1 + t2 + t3 <= d; ++t3) {
              if (2 * t1 < al[0] || 2 * t2 < al[1] || 2 * t3 < al[2]) continue;
              const int t0 = d - t1 - t2 - t3;
              const LD multinom =
                  fact[d] / (fact[t0] * fact[t1] * fact[t2] * fact[t3]);
              const int sgn = (t1 + t2 + t3 + al[0] + al[1] + al[2]) % 2 ? -1 : 1;
              const LD coeff = static_cast<LD>(sgn) * multinom * fallfac(2 * t1, al[0]) *
                               fallfac(2 * t2, al[1]) * fallfac(2 * t3, al[2]);
              const int gp = 2 * t1 - al[0], gq = 2 * t2 - al[1], gr = 2 * t3 - al[2];
              const int deg = gp + gq + gr;
              if (deg == d) {
                // locate within the exact-degree-d list
                int row = -1;
                for (int i = 0; i < md; ++i)
                  if (alphas[i][0] == gp && alphas[i][1] == gq && alphas[i][2] == gr) {
                    row = i;
                    break;
                  }
                A(col, row) += coeff;
              } else {
                // lower-degree density term: substitute the already-known potential
                const int pidx = basis_.index_of(gp, gq, gr);
                const Poly3& known = psi_[static_cast<std::size_t>(pidx)];
                for (const auto& [k, v] : known.terms())
                  B(col, out_basis.index_of(k[0], k[1], k[2])) -=
                      coeff * static_cast<LD>(v);
              }
            }
        // --- h_alpha: compositions of d+1 ---
        const LD pref = kxl * kyl / (4.0L * static_cast<LD>(d + 1));
        for (int t1 = 0; t1 <= d + 1; ++t1)
          for (int t2 = 0; t1 + t2 <= d + 1; ++t2)
            for (int t3 = 0; t1 + t2 + t3 <= d + 1; ++t3) {
              if (2 * t1 < al[0] || 2 * t2 < al[1] || 2 * t3 < al[2]) continue;
              const int t0 = d + 1 - t1 - t2 - t3;
              const LD multinom =
                  fact[d + 1] / (fact[t0] * fact[t1] * fact[t2] * fact[t3]);
              const int sgn = (t1 + t2 + t3 + al[0] + al[1] + al[2]) % 2 ? -1 : 1;
              const LD coeff = static_cast<LD>(sgn) * multinom * fallfac(2 * t1, al[0]) *
                               fallfac(2 * t2, al[1]) * fallfac(2 * t3, al[2]) *
                               powkx[2 * t1] * powky[2 * t2] *
                               static_cast<LD>(beta[bidx(t1, t2, t3)]) * pref;
              const int gp = 2 * t1 - al[0], gq = 2 * t2 - al[1], gr = 2 * t3 - al[2];
              B(col, out_basis.index_of(gp, gq, gr)) += coeff;
            }
      }

      // Solve A * X = B for the exact-degree-d potentials
      Eigen::PartialPivLU<Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>> lu(A);
      Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> X = lu.solve(B);
      if (!X.allFinite())
        throw NumericError("BallPotentialTable: singular reduction at degree " +
                           std::to_string(d));
      for (int i = 0; i < md; ++i) {
        Poly3 psi;
        for (std::size_t j = 0; j < out_basis.size(); ++j) {
          const double v = static_cast<double>(X(i, j));
          if (v != 0.0) {
            const auto& m = out_basis.monomials[j];
            psi.add(m[0], m[1], m[2], v);
          }
        }
        const int target = basis_.index_of(alphas[i][0], alphas[i][1], alphas[i][2]);
        psi_[static_cast<std::size_t>(target)] = std::move(psi);
      }
    }
  }

  double kx_, ky_;
  int dmax_;
  PolyBasis basis_;
  std::vector<Poly3> psi_;
};

/// Polynomial density (or fluctuation) over a reference ellipsoid, physical
/// coordinates in l_perp.
struct EllipsoidPoly {
  Poly3 poly;
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};  // (R_x, R_y, R_z)
};

/// Interior value of (1/4pi) int_Gamma density(s)/|r-s| d^3 s as a polynomial
/// of degree deg + 2 (Ferrers/Dyson structure), Gamma the reference ellipsoid.
inline EllipsoidPoly ellipsoid_potential(const EllipsoidPoly& density, double quad_tol = 1e-13) {
  const auto& ax = density.semi_axes;
  if (!(ax[0] > 0.0) || !(ax[1] > 0.0) || !(ax[2] > 0.0))
    throw DomainError("ellipsoid_potential: semi-axes must be positive");
  const int d = density.poly.degree();
  EllipsoidPoly out;
  out.semi_axes = ax;
  if (d < 0) return out;
  if (d > BallPotentialTable::kMaxSupportedDegree)
    throw CapabilityError("ellipsoid_potential: density degree above supported maximum");
  const double kx = ax[0] / ax[2], ky = ax[1] / ax[2];
  BallPotentialTable table(kx, ky, d, quad_tol);
  const Poly3 scaled_density = density.poly.substituted_scale(ax[0], ax[1], ax[2]);
  Poly3 phi_scaled = table.potential_of(scaled_density);
  phi_scaled *= ax[2] * ax[2];
  out.poly = phi_scaled.substituted_scale(1.0 / ax[0], 1.0 / ax[1], 1.0 / ax[2]);
  return out;
}

/// K[dn] = -3 d^2/dx^2 ellipsoid_potential(dn) - dn, same degree as the input;
/// the domain is the unperturbed ellipsoid (no boundary extension).
inline EllipsoidPoly k_operator(const EllipsoidPoly& density, double quad_tol = 1e-13) {
  EllipsoidPoly pot = ellipsoid_potential(density, quad_tol);
  EllipsoidPoly out;
  out.semi_axes = density.semi_axes;
  out.poly = pot.poly.derivative(0).derivative(0);
  out.poly *= -3.0;
  out.poly -= density.poly;
  return out;
}

}  // namespace rotodip
