#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rotodip/grid.hpp"
#include "rotodip/kernel.hpp"
#include "rotodip/types.hpp"

namespace rotodip {

/// Order parameter on a grid, unit norm after rescaling (the particle number
/// lives in interaction_scale).
struct FieldState {
  SimGrid grid;
  std::vector<std::complex<double>> psi;
  double t = 0.0;
  double eps_dd = 0.0;
};

struct Moments {
  double x2 = 0.0, y2 = 0.0, z2 = 0.0, xy = 0.0;
};

struct AlphaEstimate {
  double moment = 0.0;     ///< Omega (x2-y2)/(x2+y2)
  double phase_fit = 0.0;  ///< quadrupolar coefficient of the phase over the bulk
  bool ok = false;
};

struct FieldObservables {
  double t = 0.0, eps_dd = 0.0, norm = 0.0, energy = 0.0;
  double x2 = 0.0, y2 = 0.0, z2 = 0.0, xy = 0.0;
  double alpha_est = 0.0;
};

namespace gpe_detail {
inline void init_fftw_threads(int nthreads) {
#ifdef ROTODIP_FFTW_THREADS
  static const bool once = [] { return fftw_init_threads() != 0; }();
  if (once) fftw_plan_with_nthreads(nthreads > 0 ? nthreads : 1);
#else
  (void)nthreads;
#endif
}
}  // namespace gpe_detail

/// Rotating-frame split-step propagator for the dipolar condensate field.
///
/// One real-time step is the symmetric composition
///   V(dt/2) A(dt/2) BZ(dt) A(dt/2) V(dt/2)
/// with V the trap+interaction phase in position space, A the x-kinetic plus
/// x-advection piece diagonal in the (kx, y) mixed representation
/// (kx^2/2 + Omega y kx), and BZ the (y,z)-kinetic plus y-advection piece
/// diagonal in (x, ky, kz) ((ky^2+kz^2)/2 - Omega x ky). Every substep is an
/// exact phase multiplication, so the norm is conserved to roundoff.
class Simulator {
 public:
  Simulator(const SystemParams& params, const SimGrid& grid, int fft_threads = 1)
      : p_(params), g_(grid), kernel_(grid, params.interaction_scale) {
    p_.validate();
    g_.validate();
    gpe_detail::init_fftw_threads(fft_threads);
    const int n = g_.n;
    psi_.assign(g_.size(), {0.0, 0.0});
    scratch_.assign(g_.size(), {0.0, 0.0});
    rho_.assign(g_.size(), 0.0);
    vdd_.assign(g_.size(), 0.0);
    vint_.assign(g_.size(), 0.0);
    rhok_.assign(static_cast<std::size_t>(n) * n * (n / 2 + 1), {0.0, 0.0});

    auto* cpsi = reinterpret_cast<fftw_complex*>(psi_.data());
    auto* cscr = reinterpret_cast<fftw_complex*>(scratch_.data());
    auto* crhok = reinterpret_cast<fftw_complex*>(rhok_.data());
    const int nn[2] = {n, n};
    const int n1[1] = {n};
    plan_a_f_ = fftw_plan_many_dft(1, n1, n * n, cpsi, nullptr, 1, n, cpsi, nullptr, 1, n,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
    plan_a_b_ = fftw_plan_many_dft(1, n1, n * n, cpsi, nullptr, 1, n, cpsi, nullptr, 1, n,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
    plan_bz_f_ = fftw_plan_many_dft(2, nn, n, cpsi, nullptr, n, 1, cpsi, nullptr, n, 1,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bz_b_ = fftw_plan_many_dft(2, nn, n, cpsi, nullptr, n, 1, cpsi, nullptr, n, 1,
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
    plan_3d_f_ = fftw_plan_dft_3d(n, n, n, cscr, cscr, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_3d_b_ = fftw_plan_dft_3d(n, n, n, cscr, cscr, FFTW_BACKWARD, FFTW_ESTIMATE);
    plan_r2c_ = fftw_plan_dft_r2c_3d(n, n, n, rho_.data(), crhok, FFTW_ESTIMATE);
    plan_c2r_ = fftw_plan_dft_c2r_3d(n, n, n, crhok, vdd_.data(), FFTW_ESTIMATE);
  }

  ~Simulator() {
    fftw_destroy_plan(plan_a_f_);
    fftw_destroy_plan(plan_a_b_);
    fftw_destroy_plan(plan_bz_f_);
    fftw_destroy_plan(plan_bz_b_);
    fftw_destroy_plan(plan_3d_f_);
    fftw_destroy_plan(plan_3d_b_);
    fftw_destroy_plan(plan_r2c_);
    fftw_destroy_plan(plan_c2r_);
  }
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const SimGrid& grid() const { return g_; }
  const SystemParams& params() const { return p_; }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }
  double eps_dd() const { return eps_; }
  void set_eps_dd(double e) { eps_ = e; }
  std::vector<std::complex<double>>& field() { return psi_; }
  const std::vector<std::complex<double>>& field() const { return psi_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  void load(const FieldState& s) {
    if (s.grid.n != g_.n || s.grid.d != g_.d)
      throw PreconditionError("Simulator::load: grid mismatch");
    psi_ = s.psi;
    t_ = s.t;
    eps_ = s.eps_dd;
  }
  FieldState extract() const {
    FieldState s;
    s.grid = g_;
    s.psi = psi_;
    s.t = t_;
    s.eps_dd = eps_;
    return s;
  }

  /// Normalized anisotropic Gaussian, widths (sx, sy, sz).
  void set_gaussian(double sx, double sy, double sz) {
    const int n = g_.n;
#pragma omp parallel for collapse(2)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy) {
        const double z = g_.coord(iz), y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double x = g_.coord(ix);
          psi_[g_.idx(ix, iy, iz)] =
              std::exp(-0.25 * (x * x / (sx * sx) + y * y / (sy * sy) + z * z / (sz * sz)));
        }
      }
    normalize();
  }

  double norm() const {
    long double acc = 0.0L;
    for (const auto& v : psi_) acc += std::norm(v);
    return static_cast<double>(acc) * g_.d * g_.d * g_.d;
  }

  void normalize() {
    const double s = 1.0 / std::sqrt(norm());
#pragma omp parallel for
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(psi_.size()); ++i) psi_[i] *= s;
  }

  /// V_int = g~ |psi|^2 + dipolar convolution at the current eps_dd,
  /// refreshed into the internal buffer; returns a reference to it.
  const std::vector<double>& interaction_potential() {
    compute_density();
    fftw_execute(plan_r2c_);
    const double inv = 1.0 / static_cast<double>(g_.size());
    const auto& tab = kernel_.table();
#pragma omp parallel for
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rhok_.size()); ++i)
      rhok_[i] *= tab[i] * eps_ * inv;
    fftw_execute(plan_c2r_);  // vdd_ now holds the dipolar term
    const double g = p_.interaction_scale;
#pragma omp parallel for
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(vint_.size()); ++i)
      vint_[i] = g * rho_[i] + vdd_[i];
    return vint_;
  }

  void step_real(double dt) { step(dt, false, true); }

  /// One imaginary-time step followed by renormalization. The rotation term
  /// is omitted by default: the eps_dd = 0 protocol targets cylindrically
  /// symmetric states, which it annihilates, while keeping it makes the
  /// descent functional unbounded below for Omega > 1.
  void step_imag(double dtau, bool include_rotation = false) {
    step(dtau, true, include_rotation);
    normalize();
  }

  Moments moments() const {
    long double x2 = 0, y2 = 0, z2 = 0, xy = 0;
    const int n = g_.n;
    for (int iz = 0; iz < n; ++iz) {
      const double z = g_.coord(iz);
      for (int iy = 0; iy < n; ++iy) {
        const double y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double x = g_.coord(ix);
          const double w = std::norm(psi_[g_.idx(ix, iy, iz)]);
          x2 += w * x * x;
          y2 += w * y * y;
          z2 += w * z * z;
          xy += w * x * y;
        }
      }
    }
    const double d3 = g_.d * g_.d * g_.d;
    return {static_cast<double>(x2) * d3, static_cast<double>(y2) * d3,
            static_cast<double>(z2) * d3, static_cast<double>(xy) * d3};
  }

  double kinetic_energy() {
    scratch_ = psi_;
    fftw_execute(plan_3d_f_);
    long double acc = 0.0L;
    const int n = g_.n;
    for (int iz = 0; iz < n; ++iz) {
      const double kz = g_.kfreq(iz);
      for (int iy = 0; iy < n; ++iy) {
        const double ky = g_.kfreq(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double kx = g_.kfreq(ix);
          acc += (kx * kx + ky * ky + kz * kz) * std::norm(scratch_[g_.idx(ix, iy, iz)]);
        }
      }
    }
    const double d3 = g_.d * g_.d * g_.d;
    return 0.5 * static_cast<double>(acc) * d3 / static_cast<double>(g_.size());
  }

  /// <L_z> = <-i (x d_y - y d_x)>.
  double angular_momentum_z() {
    long double acc = 0.0L;
    for (int axis : {0, 1}) {  // 0: d_y psi weighted by x; 1: d_x psi weighted by -y
      scratch_ = psi_;
      fftw_execute(plan_3d_f_);
      const int n = g_.n;
#pragma omp parallel for collapse(2)
      for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy) {
          const double ky = g_.kfreq(iy);
          for (int ix = 0; ix < n; ++ix) {
            const double k = axis == 0 ? ky : g_.kfreq(ix);
            scratch_[g_.idx(ix, iy, iz)] *= std::complex<double>(0.0, k);
          }
        }
      fftw_execute(plan_3d_b_);
      const double inv = 1.0 / static_cast<double>(g_.size());
      for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy) {
          const double y = g_.coord(iy);
          for (int ix = 0; ix < n; ++ix) {
            const double x = g_.coord(ix);
            const double w = axis == 0 ? x : -y;
            const std::size_t id = g_.idx(ix, iy, iz);
            // <-i psi* dpsi> accumulated as Re[conj(psi) * (-i) * dpsi]
            const std::complex<double> dpsi = scratch_[id] * inv;
            acc += w * (std::conj(psi_[id]) * std::complex<double>(0.0, -1.0) * dpsi).real();
          }
        }
    }
    return static_cast<double>(acc) * g_.d * g_.d * g_.d;
  }

  /// Rotating-frame energy E - Omega <L_z> (the conserved quantity at fixed
  /// eps_dd).
  double energy() { return energy_lab() - (p_.omega != 0.0 ? p_.omega * angular_momentum_z() : 0.0); }

  /// Lab-frame energy functional (kinetic + trap + contact/2 + dipolar/2).
  double energy_lab() {
    const double kin = kinetic_energy();
    interaction_potential();
    long double trap = 0, cont = 0, dip = 0;
    const int n = g_.n;
    const double g = p_.interaction_scale, g2 = p_.gamma * p_.gamma;
    for (int iz = 0; iz < n; ++iz) {
      const double z = g_.coord(iz);
      for (int iy = 0; iy < n; ++iy) {
        const double y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double x = g_.coord(ix);
          const std::size_t id = g_.idx(ix, iy, iz);
          const double w = std::norm(psi_[id]);
          trap += 0.5 * (x * x + y * y + g2 * z * z) * w;
          cont += 0.5 * g * w * w;
          dip += 0.5 * vdd_[id] * w;
        }
      }
    }
    const double d3 = g_.d * g_.d * g_.d;
    return kin + static_cast<double>(trap + cont + dip) * d3;
  }

  /// Chemical potential diagnostic (interactions at full weight).
  double chemical_potential() {
    const double kin = kinetic_energy();
    interaction_potential();
    long double rest = 0;
    const int n = g_.n;
    const double g2 = p_.gamma * p_.gamma;
    for (int iz = 0; iz < n; ++iz) {
      const double z = g_.coord(iz);
      for (int iy = 0; iy < n; ++iy) {
        const double y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double x = g_.coord(ix);
          const std::size_t id = g_.idx(ix, iy, iz);
          rest += (0.5 * (x * x + y * y + g2 * z * z) + vint_[id]) * std::norm(psi_[id]);
        }
      }
    }
    double mu = kin + static_cast<double>(rest) * g_.d * g_.d * g_.d;
    if (p_.omega != 0.0) mu -= p_.omega * angular_momentum_z();
    return mu;
  }

  /// Primary estimator: second-moment anisotropy mapped through the
  /// stationary-velocity relation. Secondary: least-squares fit of the bulk
  /// phase to c*xy (density above half peak).
  AlphaEstimate alpha_estimate() const {
    AlphaEstimate out;
    const auto m = moments();
    const double den = m.x2 + m.y2;
    if (!(den > 0.0)) return out;
    out.moment = p_.omega * (m.x2 - m.y2) / den;

    double peak = 0.0;
    std::size_t ipeak = 0;
    for (std::size_t i = 0; i < psi_.size(); ++i) {
      const double w = std::norm(psi_[i]);
      if (w > peak) {
        peak = w;
        ipeak = i;
      }
    }
    if (!(peak > 0.0)) return out;
    const std::complex<double> ref = psi_[ipeak] / std::abs(psi_[ipeak]);
    long double sw = 0, su = 0, suu = 0, sf = 0, suf = 0;
    const int n = g_.n;
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy) {
        const double y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const std::size_t id = g_.idx(ix, iy, iz);
          const double w = std::norm(psi_[id]);
          if (w < 0.5 * peak) continue;
          const double u = g_.coord(ix) * y;
          const double ph = std::arg(psi_[id] * std::conj(ref));
          sw += w;
          su += w * u;
          suu += w * u * u;
          sf += w * ph;
          suf += w * u * ph;
        }
      }
    const long double det = sw * suu - su * su;
    if (det > 0.0L) {
      out.phase_fit = static_cast<double>((sw * suf - su * sf) / det);
      out.ok = true;
    }
    return out;
  }

  FieldObservables observables() {
    FieldObservables o;
    o.t = t_;
    o.eps_dd = eps_;
    o.norm = norm();
    o.energy = energy();
    const auto m = moments();
    o.x2 = m.x2;
    o.y2 = m.y2;
    o.z2 = m.z2;
    o.xy = m.xy;
    o.alpha_est = alpha_estimate().moment;
    return o;
  }

 private:
  void compute_density() {
#pragma omp parallel for
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(psi_.size()); ++i)
      rho_[i] = std::norm(psi_[i]);
  }

  /// Apply exp(-i a V) (real time) or exp(-a V) (imaginary time) with the
  /// current interaction potential.
  void apply_potential_phase(double a, bool imag) {
    interaction_potential();
    const int n = g_.n;
    const double g2 = p_.gamma * p_.gamma;
#pragma omp parallel for collapse(2)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy) {
        const double z = g_.coord(iz), y = g_.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
          const double x = g_.coord(ix);
          const std::size_t id = g_.idx(ix, iy, iz);
          const double v = 0.5 * (x * x + y * y + g2 * z * z) + vint_[id];
          psi_[id] *= imag ? std::complex<double>(std::exp(-a * v), 0.0)
                           : std::polar(1.0, -a * v);
        }
      }
  }

  void ensure_kinetic_tables(double dt, bool imag, bool rot) {
    if (dt == tab_dt_ && imag == tab_imag_ && rot == tab_rot_ && !tab_a_.empty()) return;
    const int n = g_.n;
    tab_a_.resize(static_cast<std::size_t>(n) * n);
    tab_bz_xy_.resize(static_cast<std::size_t>(n) * n);
    tab_bz_z_.resize(n);
    const double om = rot ? p_.omega : 0.0;
    auto phase = [&](double h) {
      return imag ? std::complex<double>(std::exp(-h), 0.0) : std::polar(1.0, -h);
    };
    for (int iy = 0; iy < n; ++iy) {
      const double y = g_.coord(iy), ky = g_.kfreq(iy);
      for (int ix = 0; ix < n; ++ix) {
        const double kx = g_.kfreq(ix), x = g_.coord(ix);
        // A: half-step in the (kx, y) representation
        tab_a_[static_cast<std::size_t>(iy) * n + ix] =
            phase(0.5 * dt * (0.5 * kx * kx + om * y * kx));
        // BZ xy part: full step in the (x, ky) representation
        tab_bz_xy_[static_cast<std::size_t>(iy) * n + ix] =
            phase(dt * (0.5 * ky * ky - om * x * ky));
      }
    }
    for (int iz = 0; iz < n; ++iz) tab_bz_z_[iz] = phase(dt * 0.5 * g_.kfreq(iz) * g_.kfreq(iz));
    tab_dt_ = dt;
    tab_imag_ = imag;
    tab_rot_ = rot;
  }

  void apply_a_half() {
    fftw_execute(plan_a_f_);
    const int n = g_.n;
    const double inv = 1.0 / n;
#pragma omp parallel for collapse(2)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          psi_[g_.idx(ix, iy, iz)] *= tab_a_[static_cast<std::size_t>(iy) * n + ix] * inv;
    fftw_execute(plan_a_b_);
  }

  void apply_bz_full() {
    fftw_execute(plan_bz_f_);
    const int n = g_.n;
    const double inv = 1.0 / (static_cast<double>(n) * n);
#pragma omp parallel for collapse(2)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy) {
        const auto tz = tab_bz_z_[iz];
        for (int ix = 0; ix < n; ++ix)
          psi_[g_.idx(ix, iy, iz)] *=
              tab_bz_xy_[static_cast<std::size_t>(iy) * n + ix] * tz * inv;
      }
    fftw_execute(plan_bz_b_);
  }

  void step(double dt, bool imag, bool rot) {
    if (!(dt > 0.0)) throw DomainError("Simulator::step: dt must be positive");
    if (!imag && rot && warnings_.empty()) {
      const double pi = 3.14159265358979323846;
      const double phase_max = p_.omega * 0.5 * g_.length() * (pi / g_.d) * dt;
      if (phase_max > pi)
        warnings_.push_back("advection phase per substep exceeds pi (|Omega| L k_max dt = " +
                            std::to_string(phase_max) + "); consider a smaller dt");
    }
    ensure_kinetic_tables(dt, imag, rot);
    apply_potential_phase(0.5 * dt, imag);
    apply_a_half();
    apply_bz_full();
    apply_a_half();
    apply_potential_phase(0.5 * dt, imag);
    if (!imag) t_ += dt;
  }

  SystemParams p_;
  SimGrid g_;
  DdiKernel kernel_;
  fftw_plan plan_a_f_{}, plan_a_b_{}, plan_bz_f_{}, plan_bz_b_{};
  fftw_plan plan_3d_f_{}, plan_3d_b_{}, plan_r2c_{}, plan_c2r_{};
  std::vector<std::complex<double>> psi_, scratch_, rhok_;
  std::vector<double> rho_, vdd_, vint_;
  std::vector<std::complex<double>> tab_a_, tab_bz_xy_, tab_bz_z_;
  double tab_dt_ = 0.0;
  bool tab_imag_ = false, tab_rot_ = false;
  double t_ = 0.0, eps_ = 0.0;
  std::vector<std::string> warnings_;
};

struct GroundStateOptions {
  double dtau = 0.005;
  double tol = 1e-8;        ///< relative energy change per unit imaginary time
  int max_steps = 200000;
  int block = 20;           ///< steps between energy checks
  bool include_rotation = false;
};

struct GroundStateResult {
  FieldState state;
  double energy = 0.0;  ///< lab-frame energy at convergence
  double mu = 0.0;
  int steps = 0;
};

/// Imaginary-time ground state at fixed eps_dd (normalized every step).
/// Fails if the energy keeps rising after step-size reduction.
inline GroundStateResult ground_state(const SystemParams& params, const SimGrid& grid,
                                      const GroundStateOptions& opt = {}, int fft_threads = 1) {
  Simulator sim(params, grid, fft_threads);
  sim.set_eps_dd(params.eps_dd);
  // trap-scale Gaussian start
  sim.set_gaussian(1.0, 1.0, 1.0 / std::sqrt(params.gamma));
  double dtau = opt.dtau;
  double e_prev = sim.energy_lab();
  int steps = 0;
  while (steps < opt.max_steps) {
    for (int i = 0; i < opt.block; ++i) sim.step_imag(dtau, opt.include_rotation);
    steps += opt.block;
    const double e = sim.energy_lab();
    if (e > e_prev + 1e-11 * std::abs(e_prev)) {
      dtau *= 0.5;
      if (dtau < 1e-5)
        throw NumericError("ground_state: energy not monotone at minimum step size");
    } else if (std::abs(e - e_prev) <
               opt.tol * std::abs(e) * (opt.block * dtau)) {
      e_prev = e;
      break;
    }
    e_prev = e;
  }
  GroundStateResult out;
  out.state = sim.extract();
  out.state.t = 0.0;
  out.energy = e_prev;
  out.mu = sim.chemical_potential();
  out.steps = steps;
  return out;
}

struct RampProtocol {
  double rate = 1e-3;            ///< d eps_dd / dt, omega_perp units
  double eps_start = 0.0, eps_stop = 0.2;
  double perturb_amplitude = 0.05;  ///< in [0, 0.2]
  std::uint64_t seed = 1;
  double dt = 0.004;
  int sample_stride = 25;
  std::vector<double> checkpoints = {0.05, 0.15, 0.20};

  void validate() const {
    if (!(rate > 0.0)) throw DomainError("RampProtocol: rate must be positive");
    if (perturb_amplitude < 0.0 || perturb_amplitude > 0.2)
      throw DomainError("RampProtocol: perturbation amplitude must lie in [0, 0.2]");
    if (eps_stop < eps_start) throw DomainError("RampProtocol: eps_stop below eps_start");
  }
};

struct RampResult {
  std::vector<FieldObservables> series;
  std::vector<double> snapshot_eps;
  bool aborted = false;
  std::string abort_reason;
  FieldState final_state;
};

/// Real-time ramp of eps_dd from a converged ground state. The density is
/// perturbed once at t = 0 (multiplicative, n -> n (1 + amplitude * u) with
/// u uniform in [-1, 1] per grid point), then eps_dd increases piecewise-
/// constantly per step at the protocol rate. Observables are sampled every
/// sample_stride steps; the sink receives a snapshot whenever a checkpoint
/// eps_dd is crossed. Cumulative norm drift beyond 1e-6 aborts the run with
/// partial output retained.
inline RampResult run_ramp(
    const SystemParams& params, const FieldState& initial, const RampProtocol& proto,
    const std::function<void(const FieldState&, double)>& snapshot_sink = {},
    int fft_threads = 1) {
  proto.validate();
  Simulator sim(params, initial.grid, fft_threads);
  sim.load(initial);
  sim.set_time(0.0);
  sim.set_eps_dd(proto.eps_start);

  // one-time density perturbation
  if (proto.perturb_amplitude > 0.0) {
    std::mt19937_64 rng(proto.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto& psi = sim.field();
    for (auto& v : psi) v *= std::sqrt(1.0 + proto.perturb_amplitude * u(rng));
    sim.normalize();
  }

  RampResult out;
  std::vector<double> pending = proto.checkpoints;
  std::sort(pending.begin(), pending.end());
  const double t_end = (proto.eps_stop - proto.eps_start) / proto.rate;
  const long long n_steps = static_cast<long long>(std::ceil(t_end / proto.dt - 1e-12));
  out.series.push_back(sim.observables());
  for (long long s = 0; s < n_steps; ++s) {
    sim.set_eps_dd(std::min(proto.eps_stop, proto.eps_start + proto.rate * sim.time()));
    sim.step_real(proto.dt);
    const bool sample = (s + 1) % proto.sample_stride == 0 || s + 1 == n_steps;
    if (sample) {
      const auto o = sim.observables();
      out.series.push_back(o);
      if (std::abs(o.norm - 1.0) > 1e-6) {
        out.aborted = true;
        out.abort_reason = "norm drift " + std::to_string(o.norm - 1.0) + " at t=" +
                           std::to_string(o.t);
        break;
      }
    }
    while (!pending.empty() && sim.eps_dd() >= pending.front() - 1e-12) {
      if (snapshot_sink) snapshot_sink(sim.extract(), pending.front());
      out.snapshot_eps.push_back(pending.front());
      pending.erase(pending.begin());
    }
  }
  if (!out.aborted) {
    sim.set_eps_dd(proto.eps_stop);
    while (!pending.empty() && pending.front() <= proto.eps_stop + 1e-12) {
      if (snapshot_sink) snapshot_sink(sim.extract(), pending.front());
      out.snapshot_eps.push_back(pending.front());
      pending.erase(pending.begin());
    }
  }
  out.final_state = sim.extract();
  return out;
}

}  // namespace rotodip
