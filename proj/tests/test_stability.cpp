#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "rotodip/stability.hpp"

using namespace rotodip;

namespace {

SystemParams make(double gamma, double omega, double eps) {
  SystemParams p;
  p.gamma = gamma;
  p.omega = omega;
  p.eps_dd = eps;
  return p;
}

TFState continued_state(const SystemParams& p) {
  return continue_in_eps(p, symmetric_state_eps0(p), 0.0);
}

bool contains_eig(const std::vector<std::complex<double>>& eigs, std::complex<double> target,
                  double tol) {
  for (const auto& e : eigs)
    if (std::abs(e - target) <= tol) return true;
  return false;
}

}  // namespace

TEST_CASE("null mode: constant phase shift") {
  const auto p = make(1.0, 2.0, 0.3);
  const auto tf = continued_state(p);
  const auto s = spectrum(tf, p, 4);
  CHECK(contains_eig(s.eigenvalues, {0.0, 0.0}, 1e-10));
}

TEST_CASE("isotropic TF mode frequencies at eps_dd = 0") {
  // quadrupole sqrt(2), monopole sqrt(5) in trap units
  const auto p = make(1.0, 0.0, 0.0);
  const auto tf = symmetric_state_eps0(p);
  const auto s = spectrum(tf, p, 4);
  CHECK(contains_eig(s.eigenvalues, {0.0, std::sqrt(2.0)}, 1e-9));
  CHECK(contains_eig(s.eigenvalues, {0.0, -std::sqrt(2.0)}, 1e-9));
  CHECK(contains_eig(s.eigenvalues, {0.0, std::sqrt(5.0)}, 1e-9));
  CHECK(contains_eig(s.eigenvalues, {0.0, -std::sqrt(5.0)}, 1e-9));
  CHECK(s.lambda0 == 0.0);
}

TEST_CASE("Kohn modes at random parameter points") {
  std::mt19937_64 rng(20260809);
  std::uniform_real_distribution<double> omd(0.0, 6.0), gad(0.5, 2.0), epd(0.0, 0.8);
  for (int t = 0; t < 6; ++t) {
    const auto p = make(gad(rng), omd(rng), epd(rng));
    TFState tf;
    try {
      tf = continued_state(p);
    } catch (const Error&) {
      continue;  // skip points where the continued branch is lost
    }
    const auto s = spectrum(tf, p, 5);
    INFO("gamma=" << p.gamma << " Omega=" << p.omega << " eps=" << p.eps_dd);
    CHECK(contains_eig(s.eigenvalues, {0.0, 1.0 - p.omega}, 1e-6));
    CHECK(contains_eig(s.eigenvalues, {0.0, -(1.0 - p.omega)}, 1e-6));
    CHECK(contains_eig(s.eigenvalues, {0.0, 1.0 + p.omega}, 1e-6));
    CHECK(contains_eig(s.eigenvalues, {0.0, -(1.0 + p.omega)}, 1e-6));
    CHECK(contains_eig(s.eigenvalues, {0.0, p.gamma}, 1e-6));
    CHECK(contains_eig(s.eigenvalues, {0.0, -p.gamma}, 1e-6));
  }
}

TEST_CASE("spectrum closed under complex conjugation") {
  const auto p = make(1.0, 3.0, 0.3);
  const auto tf = continued_state(p);
  const auto s = spectrum(tf, p, 6);
  for (const auto& e : s.eigenvalues)
    CHECK(contains_eig(s.eigenvalues, std::conj(e), 1e-9));
}

TEST_CASE("parity split agrees with the full dense solve") {
  const auto p = make(1.0, 2.0, 0.4);
  const auto tf = continued_state(p);
  const auto split = spectrum(tf, p, 4, false, true);
  const auto full = spectrum(tf, p, 4, false, false);
  REQUIRE(split.eigenvalues.size() == full.eigenvalues.size());
  for (const auto& e : split.eigenvalues)
    CHECK(contains_eig(full.eigenvalues, e, 1e-7));
  CHECK(split.lambda0 == Catch::Approx(full.lambda0).margin(1e-7));
}

TEST_CASE("degree blocks never couple upward") {
  const auto p = make(1.0, 2.5, 0.35);
  const auto tf = continued_state(p);
  const PolyBasis basis = PolyBasis::make(5);
  const auto M = assemble_L(tf, p, basis);
  const std::size_t B = basis.size();
  auto deg = [&](std::size_t i) {
    const auto& m = basis.monomials[i % B];
    return m[0] + m[1] + m[2];
  };
  int violations = 0;
  for (std::size_t col = 0; col < 2 * B; ++col)
    for (std::size_t row = 0; row < 2 * B; ++row)
      if (deg(row) > deg(col) && M(row, col) != 0.0) ++violations;
  CHECK(violations == 0);
}

TEST_CASE("assemble_L rejects inconsistent state/parameter pairs") {
  const auto p = make(1.0, 2.0, 0.3);
  TFState wrong = symmetric_state_eps0(make(1.0, 2.0, 0.0));  // not a solution at eps = 0.3
  CHECK_THROWS_AS(assemble_L(wrong, p, PolyBasis::make(3)), PreconditionError);
}

TEST_CASE("eigenvalue nesting under truncation refinement") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> omd(0.5, 5.0), epd(0.05, 0.6);
  for (int t = 0; t < 3; ++t) {
    const auto p = make(1.0, omd(rng), epd(rng));
    TFState tf;
    try {
      tf = continued_state(p);
    } catch (const Error&) {
      continue;
    }
    const auto coarse = spectrum(tf, p, 6, true);
    const auto fine = spectrum(tf, p, 8, false);
    for (std::size_t i = 0; i < coarse.eigenvalues.size(); ++i) {
      if (coarse.mode_order[i] >= 6) continue;
      INFO("eig " << coarse.eigenvalues[i] << " order " << coarse.mode_order[i]);
      CHECK(contains_eig(fine.eigenvalues, coarse.eigenvalues[i], 1e-8));
    }
  }
}

TEST_CASE("dominant growth rate at the reference point is truncation-converged") {
  // eps_dd = 0.1, Omega = 3, gamma = 1. The growth rate stems from a
  // low-order mode and is independent of N_max well below the default 13.
  const auto p = make(1.0, 3.0, 0.1);
  const auto tf = continued_state(p);
  const auto s8 = spectrum(tf, p, 8);
  const auto s13 = spectrum(tf, p, 13);
  CHECK(s13.lambda0 > 0.0);
  CHECK(s8.lambda0 == Catch::Approx(s13.lambda0).epsilon(1e-7));
  const auto cycles = instability_timescale(s13.lambda0, p.omega);
  REQUIRE(cycles.has_value());
  CHECK(*cycles == Catch::Approx(p.omega / (2.0 * 3.14159265358979 * s13.lambda0)).epsilon(1e-9));
}

TEST_CASE("instability timescale") {
  auto c = instability_timescale(0.05, 3.0);
  REQUIRE(c.has_value());
  CHECK(*c == Catch::Approx(9.549296).epsilon(1e-6));
  auto c2 = instability_timescale(0.1, 3.0);
  CHECK(*c2 == Catch::Approx(*c / 2.0).epsilon(1e-12));
  CHECK(instability_timescale(0.1, 6.0).value() == Catch::Approx(9.5493).margin(1e-3));
  CHECK_FALSE(instability_timescale(0.0, 3.0).has_value());
  CHECK_FALSE(instability_timescale(-1.0, 3.0).has_value());
}

TEST_CASE("stability map smoke on a tiny grid") {
  const auto rows = stability_map({3.0}, {0.0, 0.1}, 1.0, 6, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK(rows[0].lambda0 == 0.0);  // eps_dd = 0 is dynamically stable
  CHECK(rows[1].ok);
  CHECK(rows[1].lambda0 > 0.0);  // any eps_dd > 0 at Omega = 3 is not
  // consistency between the sweep and a single call
  const auto p = make(1.0, 3.0, 0.1);
  const auto tf = continued_state(p);
  const auto s = spectrum(tf, p, 6);
  CHECK(rows[1].lambda0 == Catch::Approx(s.lambda0).epsilon(1e-8).margin(1e-12));
  CHECK(rows[1].alpha == Catch::Approx(tf.alpha).margin(1e-10));
}

TEST_CASE("map rejects empty grids") {
  CHECK_THROWS_AS(stability_map({}, {0.1}, 1.0, 4, 1), DomainError);
}
