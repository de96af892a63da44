#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "rotodip/gpe.hpp"
#include "rotodip/solver.hpp"

using namespace rotodip;

namespace {

SystemParams make(double gamma, double omega, double eps, double g) {
  SystemParams p;
  p.gamma = gamma;
  p.omega = omega;
  p.eps_dd = eps;
  p.interaction_scale = g;
  return p;
}

double mean_x(const Simulator& sim) {
  const auto& g = sim.grid();
  const auto& psi = sim.field();
  long double acc = 0.0L;
  for (int iz = 0; iz < g.n; ++iz)
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix)
        acc += g.coord(ix) * std::norm(psi[g.idx(ix, iy, iz)]);
  return static_cast<double>(acc) * g.d * g.d * g.d;
}

double density_change(const std::vector<std::complex<double>>& a,
                      const std::vector<std::complex<double>>& b) {
  double peak = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    peak = std::max(peak, std::norm(a[i]));
    diff = std::max(diff, std::abs(std::norm(a[i]) - std::norm(b[i])));
  }
  return diff / peak;
}

}  // namespace

TEST_CASE("oscillator eigenstate is stationary in real time") {
  SimGrid g;
  g.n = 32;
  g.d = 0.375;  // box 12: keeps periodic Gaussian images below 1e-8
  Simulator sim(make(1, 0, 0, 0), g);
  const double s = 1.0 / std::sqrt(2.0);
  sim.set_gaussian(s, s, s);  // exact ground state psi ~ exp(-r^2/2)
  const auto initial = sim.field();
  for (int i = 0; i < 100; ++i) sim.step_real(2e-4);
  CHECK(density_change(initial, sim.field()) < 1e-8);
  CHECK(std::abs(sim.norm() - 1.0) < 1e-12);
}

TEST_CASE("off-center coherent state oscillates at the trap frequency") {
  SimGrid g;
  g.n = 32;
  g.d = 0.3;
  Simulator sim(make(1, 0, 0, 0), g);
  const double s = 1.0 / std::sqrt(2.0), x0 = 0.9;
  auto& psi = sim.field();
  for (int iz = 0; iz < g.n; ++iz)
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix) {
        const double x = g.coord(ix) - x0, y = g.coord(iy), z = g.coord(iz);
        psi[g.idx(ix, iy, iz)] = std::exp(-(x * x + y * y + z * z) / (4 * s * s));
      }
  sim.normalize();
  const double pi = 4.0 * std::atan(1.0);
  const double dt = 0.004;
  const int per_period = static_cast<int>(2.0 * pi / dt);
  double amp_min = 1e9, amp_max = 0.0;
  for (int period = 0; period < 10; ++period) {
    for (int i = 0; i < per_period; ++i) sim.step_real(dt);
    const double trem = 2.0 * pi * (period + 1) - sim.time();
    if (trem > 1e-12) sim.step_real(trem);
    const double x = mean_x(sim);
    amp_min = std::min(amp_min, x);
    amp_max = std::max(amp_max, x);
  }
  CHECK(std::abs(amp_max - x0) < 1e-4 * x0);
  CHECK(std::abs(amp_min - x0) < 1e-4 * x0);
}

TEST_CASE("rotation term leaves azimuthally symmetric densities invariant") {
  SimGrid g;
  g.n = 32;
  g.d = 0.375;
  Simulator sim(make(1, 3, 0, 0), g);
  const double s = 1.0 / std::sqrt(2.0);
  sim.set_gaussian(s, s, s);  // rotation-invariant eigenstate
  const auto initial = sim.field();
  for (int i = 0; i < 200; ++i) sim.step_real(1e-3);
  CHECK(density_change(initial, sim.field()) < 1e-6);
}

TEST_CASE("norm is conserved to roundoff in real time") {
  SimGrid g;
  g.n = 24;
  g.d = 0.35;
  Simulator sim(make(1, 2, 0.3, 80), g);
  sim.set_eps_dd(0.3);
  sim.set_gaussian(1.1, 0.9, 1.0);
  for (int i = 0; i < 500; ++i) sim.step_real(0.004);
  CHECK(std::abs(sim.norm() - 1.0) < 1e-10);
}

TEST_CASE("rotating-frame energy is conserved at fixed eps_dd") {
  SimGrid g;
  g.n = 32;
  g.d = 0.3;
  const auto p = make(1, 2, 0.2, 60);
  const auto gs = ground_state(p, g);
  Simulator sim(p, g);
  sim.load(gs.state);
  sim.set_eps_dd(0.2);
  const double e0 = sim.energy();
  for (int i = 0; i < 300; ++i) sim.step_real(0.004);
  CHECK(std::abs(sim.energy() - e0) < 1e-6 * std::abs(e0));
}

TEST_CASE("imaginary time: noninteracting limits") {
  SimGrid g;
  g.n = 32;
  g.d = 0.28;
  {
    const auto r = ground_state(make(1, 0, 0, 0), g);
    CHECK(r.energy == Catch::Approx(1.5).margin(2e-5));
    CHECK(r.mu == Catch::Approx(1.5).margin(2e-5));
  }
  {
    // gamma = 2: E = 1 + gamma/2
    const auto r = ground_state(make(2, 0, 0, 0), g);
    CHECK(r.energy == Catch::Approx(2.0).margin(1e-4));
  }
}

TEST_CASE("imaginary time is insensitive to the rotation of a symmetric state") {
  SimGrid g;
  g.n = 24;
  g.d = 0.35;
  const auto a = ground_state(make(1, 0, 0, 40), g);
  const auto b = ground_state(make(1, 3, 0, 40), g);
  CHECK(a.energy == Catch::Approx(b.energy).epsilon(1e-10));
  Simulator sim(make(1, 3, 0, 40), g);
  sim.load(b.state);
  CHECK(std::abs(sim.alpha_estimate().moment) < 1e-8);
}

TEST_CASE("imaginary time reaches the TF regime closure") {
  SimGrid g;
  g.n = 48;
  g.d = 0.22;
  const auto p = make(1, 0, 0, 400);
  GroundStateOptions opt;
  opt.tol = 1e-7;
  const auto r = ground_state(p, g, opt);
  const auto cl = tf_radius_and_mu(1.0, 1.0, p);
  CHECK(r.mu == Catch::Approx(cl.mu).epsilon(0.04));
  Simulator sim(p, g);
  sim.load(r.state);
  const auto m = sim.moments();
  // TF profile: <z^2> = R_z^2 / 7
  CHECK(std::sqrt(7.0 * m.z2) == Catch::Approx(cl.r_z).epsilon(0.04));
}

TEST_CASE("alpha estimators on a synthetic TF state") {
  SimGrid g;
  g.n = 64;
  g.d = 0.12;
  const double kx = 1.2, ky = 0.95, rz = 2.5, om = 0.3;
  const double alpha = om * (kx * kx - ky * ky) / (kx * kx + ky * ky);
  Simulator sim(make(1, om, 0, 50), g);
  auto& psi = sim.field();
  TFState tf;
  tf.kappa_x = kx;
  tf.kappa_y = ky;
  tf.r_z = rz;
  tf.n0 = 1.0;
  for (int iz = 0; iz < g.n; ++iz)
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix) {
        const double x = g.coord(ix), y = g.coord(iy), z = g.coord(iz);
        const double n = tf_density(tf, x, y, z);
        psi[g.idx(ix, iy, iz)] = std::sqrt(n) * std::polar(1.0, alpha * x * y);
      }
  sim.normalize();
  const auto est = sim.alpha_estimate();
  REQUIRE(est.ok);
  // the phase fit recovers the quadrupolar coefficient exactly
  CHECK(est.phase_fit == Catch::Approx(alpha).epsilon(1e-9));
  // the moment estimator carries the TF-edge discretization error of the
  // second moments (O(d^2) on this grid)
  CHECK(est.moment == Catch::Approx(alpha).epsilon(2e-3));
  CHECK(std::abs(est.moment - est.phase_fit) < 2e-3 * std::abs(alpha) + 1e-6);
}

TEST_CASE("splitting converges at second order in dt") {
  SimGrid g;
  g.n = 24;
  g.d = 0.35;
  const auto p = make(1, 1, 0.3, 50);
  auto evolve = [&](double dt, double T) {
    Simulator sim(p, g);
    sim.set_eps_dd(0.3);
    sim.set_gaussian(1.05, 0.95, 1.0);
    const long long steps = std::llround(T / dt);
    for (long long i = 0; i < steps; ++i) sim.step_real(dt);
    return sim.extract().psi;
  };
  const double T = 0.4;
  const auto ref = evolve(5e-4, T);
  auto err = [&](const std::vector<std::complex<double>>& a) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - ref[i]);
    return std::sqrt(static_cast<double>(acc));
  };
  const double e1 = err(evolve(4e-3, T));
  const double e2 = err(evolve(2e-3, T));
  CHECK(e1 / e2 > 3.5);  // order >= 2
}

TEST_CASE("ramp smoke: sampling, checkpoints, norm guard") {
  SimGrid g;
  g.n = 24;
  g.d = 0.35;
  const auto p = make(1, 3, 0, 40);
  const auto gs = ground_state(p, g);
  RampProtocol proto;
  proto.rate = 2e-3;
  proto.eps_start = 0.0;
  proto.eps_stop = 0.02;
  proto.perturb_amplitude = 0.05;
  proto.seed = 7;
  proto.dt = 0.004;
  proto.sample_stride = 50;
  proto.checkpoints = {0.01, 0.02};
  int snaps = 0;
  const auto res = run_ramp(p, gs.state, proto,
                            [&](const FieldState& s, double eps) {
                              ++snaps;
                              CHECK(s.psi.size() == g.size());
                              CHECK(eps >= 0.0099);
                            });
  CHECK_FALSE(res.aborted);
  CHECK(snaps == 2);
  REQUIRE(res.series.size() > 5);
  for (const auto& o : res.series) CHECK(std::abs(o.norm - 1.0) < 1e-8);
  // eps_dd advanced to the stop value
  CHECK(res.final_state.eps_dd == Catch::Approx(0.02).margin(1e-9));
  // determinism: same protocol, same numbers
  const auto res2 = run_ramp(p, gs.state, proto, {});
  REQUIRE(res2.series.size() == res.series.size());
  for (std::size_t i = 0; i < res.series.size(); ++i) {
    CHECK(res.series[i].alpha_est == res2.series[i].alpha_est);
    CHECK(res.series[i].energy == res2.series[i].energy);
  }
}

TEST_CASE("ramp protocol validation") {
  RampProtocol proto;
  proto.perturb_amplitude = 0.5;
  CHECK_THROWS_AS(proto.validate(), DomainError);
  proto.perturb_amplitude = 0.05;
  proto.rate = 0.0;
  CHECK_THROWS_AS(proto.validate(), DomainError);
}
