// Simulator-scale acceptance: conservation suite and the qualitative
// ramp reproduction. Marked slow (tens of minutes at desk scale).
#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include <algorithm>
#include <thread>

#include "rotodip/gpe.hpp"
#include "rotodip/io.hpp"
#include "rotodip/solver.hpp"

using namespace rotodip;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(const char* id, bool pass, const std::string& detail, double seconds) {
  std::printf("[%s] %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, detail.c_str(), seconds);
  std::fflush(stdout);
}

int hw_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<unsigned>(hw == 0 ? 1 : hw, 8));
}

// relative RMS residual of a quadratic surface fit to the z = 0 density
double ripple_residual(const FieldState& s) {
  const auto& g = s.grid;
  const int n = g.n, iz = n / 2;
  double peak = 0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      peak = std::max(peak, std::norm(s.psi[g.idx(ix, iy, iz)]));
  constexpr int NP = 6;
  double A[NP][NP] = {}, b[NP] = {};
  auto basis = [](double x, double y, double* f) {
    f[0] = 1;
    f[1] = x * x;
    f[2] = y * y;
    f[3] = x * y;
    f[4] = x;
    f[5] = y;
  };
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double w = std::norm(s.psi[g.idx(ix, iy, iz)]);
      if (w < 0.1 * peak) continue;
      double f[NP];
      basis(g.coord(ix), g.coord(iy), f);
      for (int r = 0; r < NP; ++r) {
        for (int c = 0; c < NP; ++c) A[r][c] += f[r] * f[c];
        b[r] += f[r] * w;
      }
    }
  for (int col = 0; col < NP; ++col) {
    int piv = col;
    for (int r = col + 1; r < NP; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    for (int c = 0; c < NP; ++c) std::swap(A[col][c], A[piv][c]);
    std::swap(b[col], b[piv]);
    for (int r = 0; r < NP; ++r)
      if (r != col) {
        const double m = A[r][col] / A[col][col];
        for (int c = 0; c < NP; ++c) A[r][c] -= m * A[col][c];
        b[r] -= m * b[col];
      }
  }
  double coef[NP];
  for (int i = 0; i < NP; ++i) coef[i] = b[i] / A[i][i];
  double rss = 0;
  int cnt = 0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double w = std::norm(s.psi[g.idx(ix, iy, iz)]);
      if (w < 0.1 * peak) continue;
      double f[NP];
      basis(g.coord(ix), g.coord(iy), f);
      double fit = 0;
      for (int a = 0; a < NP; ++a) fit += coef[a] * f[a];
      rss += (w - fit) * (w - fit);
      ++cnt;
    }
  return std::sqrt(rss / cnt) / peak;
}

}  // namespace

TEST_CASE("criterion 8: simulator conservation suite (64^3)") {
  Stopwatch sw;
  const int threads = hw_threads();
  SimGrid grid;
  grid.n = 64;
  grid.d = 0.2;

  // (a) eps_dd = 0 ground state vs the TF closure, interaction chosen so
  // that mu >= 10
  SystemParams p0;
  p0.gamma = 1.0;
  p0.interaction_scale = 1600.0;
  const auto cl = tf_radius_and_mu(1.0, 1.0, p0);
  REQUIRE(cl.mu >= 10.0);
  const auto gs = ground_state(p0, grid, {}, threads);
  double mu_rel, rz_rel;
  {
    Simulator sim(p0, grid, threads);
    sim.load(gs.state);
    mu_rel = std::abs(sim.chemical_potential() - cl.mu) / cl.mu;
    rz_rel = std::abs(std::sqrt(7.0 * sim.moments().z2) - cl.r_z) / cl.r_z;
  }
  const bool tf_ok = mu_rel <= 0.03 && rz_rel <= 0.03;

  // (b) imaginary-time energy monotonicity at eps_dd = 0.1
  bool monotone = true;
  {
    SystemParams p1 = p0;
    p1.eps_dd = 0.1;
    Simulator sim(p1, grid, threads);
    sim.set_eps_dd(0.1);
    sim.set_gaussian(1.0, 1.0, 1.0);
    double prev = sim.energy_lab();
    for (int block = 0; block < 40; ++block) {
      for (int i = 0; i < 20; ++i) sim.step_imag(0.004);
      const double e = sim.energy_lab();
      if (e > prev + 1e-12 * std::abs(prev)) monotone = false;
      prev = e;
    }
  }

  // (c) real-time norm drift over 1e4 steps
  double norm_drift;
  {
    SystemParams p2 = p0;
    p2.omega = 3.0;
    Simulator sim(p2, grid, threads);
    sim.load(gs.state);
    for (int i = 0; i < 10000; ++i) sim.step_real(0.004);
    norm_drift = std::abs(sim.norm() - 1.0);
  }

  // (d) rotating-frame energy drift over 1e3 steps at fixed eps_dd
  double energy_drift;
  {
    SystemParams p3 = p0;
    p3.omega = 3.0;
    p3.eps_dd = 0.1;
    const auto gs1 = ground_state(p3, grid, {}, threads);
    Simulator sim(p3, grid, threads);
    sim.load(gs1.state);
    sim.set_eps_dd(0.1);
    const double e0 = sim.energy();
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      sim.step_real(0.004);
      if ((i + 1) % 200 == 0) worst = std::max(worst, std::abs(sim.energy() - e0));
    }
    energy_drift = worst / std::abs(e0);
  }

  const double secs = sw.seconds();
  const bool pass =
      tf_ok && monotone && norm_drift <= 1e-6 && energy_drift <= 1e-6 && secs < 1800.0;
  report("C8", pass,
         "mu dev " + format_double(mu_rel) + ", Rz dev " + format_double(rz_rel) +
             ", imag monotone " + (monotone ? "yes" : "NO") + ", norm drift " +
             format_double(norm_drift) + ", energy drift " + format_double(energy_drift),
         secs);
  CHECK(pass);
}

TEST_CASE("criterion 9: ramp reproduction at desk scale") {
  Stopwatch sw;
  const int threads = hw_threads();
  SystemParams p;
  p.gamma = 1.0;
  p.omega = 3.0;
  p.interaction_scale = 200.0;
  SimGrid grid;
  grid.n = 64;
  grid.d = 0.18;

  const auto gs = ground_state(p, grid, {}, threads);

  RampProtocol proto;
  proto.rate = 1e-3;
  proto.eps_start = 0.0;
  proto.eps_stop = 0.2;
  proto.perturb_amplitude = 0.05;
  proto.seed = 20260809;
  proto.dt = 0.004;
  proto.sample_stride = 25;
  proto.checkpoints = {0.05, 0.15};
  std::map<double, FieldState> snaps;
  const auto res = run_ramp(p, gs.state, proto,
                            [&](const FieldState& s, double eps) { snaps[eps] = s; },
                            threads);
  REQUIRE_FALSE(res.aborted);
  REQUIRE(snaps.count(0.05) == 1);
  REQUIRE(snaps.count(0.15) == 1);

  // stationary-branch alpha(eps) along the ramp
  auto alpha_tf = [&](double eps) {
    SystemParams q = p;
    q.eps_dd = eps;
    return continue_in_eps(q, symmetric_state_eps0(q), 0.0).alpha;
  };

  // windowed statistics of alpha_est over eps windows of width 0.02
  struct Window {
    double center, mean, stdev;
  };
  std::vector<Window> windows;
  for (double c = 0.02; c <= 0.19 + 1e-9; c += 0.01) {
    double s = 0, s2 = 0;
    int n = 0;
    for (const auto& o : res.series)
      if (std::abs(o.eps_dd - c) <= 0.01) {
        s += o.alpha_est;
        s2 += o.alpha_est * o.alpha_est;
        ++n;
      }
    if (n < 10) continue;
    const double mean = s / n;
    windows.push_back({c, mean, std::sqrt(std::max(0.0, s2 / n - mean * mean))});
  }
  REQUIRE(windows.size() > 10);

  // (a) tracking within 10% for eps_dd <= 0.05
  bool tracks = true;
  double worst_track = 0.0;
  for (const auto& w : windows) {
    if (w.center < 0.025 || w.center > 0.05 + 1e-9) continue;
    const double target = alpha_tf(w.center);
    const double rel = std::abs(w.mean - target) / std::abs(target);
    worst_track = std::max(worst_track, rel);
    if (rel > 0.10) tracks = false;
  }

  // (b) fluctuation onset within [0.05, 0.12]: windowed scatter exceeding
  // four times the early-ramp baseline
  double baseline = 0.0;
  {
    std::vector<double> early;
    for (const auto& w : windows)
      if (w.center >= 0.02 && w.center <= 0.04) early.push_back(w.stdev);
    std::sort(early.begin(), early.end());
    baseline = early[early.size() / 2];
  }
  double onset = -1.0;
  for (const auto& w : windows)
    if (w.stdev >= 4.0 * baseline) {
      onset = w.center;
      break;
    }
  const bool onset_ok = onset >= 0.05 && onset <= 0.12;

  // (c) gross departure from the branch before eps_dd = 0.2
  bool departs = false;
  for (const auto& w : windows) {
    if (w.center > 0.195) continue;
    const double target = alpha_tf(w.center);
    if (std::abs(w.mean - target) >= std::max(std::abs(target), 0.01)) departs = true;
  }

  // (d) ripple structure at eps = 0.15 absent at 0.05
  const double r05 = ripple_residual(snaps[0.05]);
  const double r15 = ripple_residual(snaps[0.15]);
  const bool ripple_ok = r15 >= 3.0 * r05;

  const double secs = sw.seconds();
  const bool pass = tracks && onset_ok && departs && ripple_ok;
  report("C9", pass,
         "worst tracking dev " + format_double(worst_track) + " (<=0.1), onset at eps = " +
             format_double(onset) + " (window [0.05, 0.12]), departure " +
             (departs ? "yes" : "NO") + ", ripple ratio " + format_double(r15 / r05) +
             " (>=3)",
         secs);
  CHECK(pass);
}
