#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "rotodip/config.hpp"
#include "rotodip/gpe.hpp"
#include "rotodip/io.hpp"
#include "rotodip/solver.hpp"
#include "rotodip/stability.hpp"

namespace rotodip {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitPartial = 4;

namespace cmd_detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<unsigned>(hw == 0 ? 1 : hw, 8));
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw DomainError("linspace: need at least one point");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

inline std::string eps_tag(double eps) {
  std::string s = format_double(eps);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

inline std::string branch_csv(const BranchCurve& curve) {
  Csv csv({"Omega", "kappa_x", "kappa_y", "alpha", "Rz", "mu", "residual_max"});
  for (const auto& pt : curve.samples)
    csv.row()
        .add(pt.sweep)
        .add(pt.state.kappa_x)
        .add(pt.state.kappa_y)
        .add(pt.state.alpha)
        .add(pt.state.r_z)
        .add(pt.state.mu)
        .add(pt.residual_max);
  return csv.bytes();
}

inline BranchCurve reversed_ascending(BranchCurve curve) {
  std::reverse(curve.samples.begin(), curve.samples.end());
  return curve;
}

/// Slice of a field at z = 0 as headerless CSV matrices (rows: iy ascending).
inline std::pair<std::string, std::string> z0_slices(const FieldState& s) {
  const int n = s.grid.n;
  const int iz = n / 2;
  std::string dens, phase;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const auto v = s.psi[s.grid.idx(ix, iy, iz)];
      if (ix) {
        dens += ',';
        phase += ',';
      }
      dens += format_double(std::norm(v));
      phase += format_double(std::arg(v));
    }
    dens += '\n';
    phase += '\n';
  }
  return {dens, phase};
}

inline std::string field_sidecar(const FieldState& s, const RunConfig& cfg) {
  std::string t;
  t += "layout: complex double pairs (re, im), index = ix + n*(iy + n*iz), x fastest\n";
  t += "n: " + std::to_string(s.grid.n) + "\n";
  t += "spacing: " + format_double(s.grid.d) + "\n";
  t += "cutoff: " + format_double(s.grid.cutoff()) + "\n";
  t += "t: " + format_double(s.t) + "\n";
  t += "eps_dd: " + format_double(s.eps_dd) + "\n";
  t += "gamma: " + format_double(cfg.params.gamma) + "\n";
  t += "omega: " + format_double(cfg.params.omega) + "\n";
  t += "interaction_scale: " + format_double(cfg.params.interaction_scale) + "\n";
  t += "seed: " + std::to_string(cfg.seed) + "\n";
  return t;
}

inline std::string field_bytes(const FieldState& s) {
  std::string out(s.psi.size() * 2 * sizeof(double), '\0');
  double* p = reinterpret_cast<double*>(out.data());
  for (std::size_t i = 0; i < s.psi.size(); ++i) {
    p[2 * i] = s.psi[i].real();
    p[2 * i + 1] = s.psi[i].imag();
  }
  return out;
}

inline SimGrid grid_from(const SimConfig& sc) {
  SimGrid g;
  g.n = sc.n;
  g.d = sc.spacing;
  g.r_c = sc.cutoff;
  g.validate();
  return g;
}

}  // namespace cmd_detail

/// Stationary-branch families over an Omega range, one CSV per branch.
inline int cmd_tf_branches(const RunConfig& cfg, RunManifest& manifest) {
  using namespace cmd_detail;
  const auto& bc = cfg.tf_branches;
  if (!(bc.omega_max > bc.omega_min) || !(bc.step > 0.0) || bc.eps_list.empty())
    throw DomainError("tf-branches: empty or inverted sweep grid");
  int emitted_for_all = kExitOk;
  for (double eps : bc.eps_list) {
    SystemParams base = cfg.params;
    base.eps_dd = eps;
    base.validate();
    const std::string tag = "eps" + eps_tag(eps);
    int emitted = 0;
    SolveOptions opt;

    // branch continued from small Omega upward ("main"; alpha = 0 when eps = 0)
    try {
      SystemParams p0 = base;
      p0.omega = bc.omega_min;
      TFState seed = continue_in_eps(p0, symmetric_state_eps0(p0), 0.0);
      auto main = continue_branch(base, {SweepKind::Omega, bc.omega_min, bc.omega_max, bc.step},
                                  seed, eps == 0.0 ? "alpha0-continuation" : "main");
      manifest.emit("branches_" + tag + "_main.csv", branch_csv(main));
      if (main.termination.has_value())
        manifest.note("termination_main_" + tag,
                      Json{{"omega", main.termination->sweep_value},
                           {"reason", main.termination->reason}});
      ++emitted;
    } catch (const Error& e) {
      manifest.warn("tf-branches " + tag + " main: " + e.what());
    }

    // upper bifurcated branch: continued down from omega_max toward the fold
    if (eps > 0.0 && bc.omega_max > 0.8) {
      try {
        SystemParams p1 = base;
        p1.omega = bc.omega_max;
        TFState seed = continue_in_eps(p1, symmetric_state_eps0(p1), 0.0);
        if (seed.alpha < 0.0) {
          auto upper =
              continue_branch(base, {SweepKind::Omega, bc.omega_max, bc.omega_min, bc.step},
                              seed, "bifurcated-upper");
          manifest.emit("branches_" + tag + "_bifurcated_upper.csv",
                        branch_csv(reversed_ascending(upper)));
          ++emitted;
        }
      } catch (const Error& e) {
        manifest.warn("tf-branches " + tag + " upper: " + e.what());
      }
    }

    // lower bifurcated branch (the one terminating at Omega = 1)
    const double wb0 = 0.7071067811865476;
    if (bc.omega_max > wb0) {
      for (double w0 : {0.9, 0.95, 0.85}) {
        try {
          SystemParams p2 = base;
          p2.omega = w0;
          TFState seed = bifurcated_state_eps0(SystemParams{base.gamma, w0, 0.0,
                                                            base.interaction_scale},
                                               -1);
          if (eps > 0.0) seed = continue_in_eps(p2, seed, 0.0);
          auto down = continue_branch(base, {SweepKind::Omega, w0, std::max(bc.omega_min, 0.5),
                                             bc.step},
                                      seed, "bifurcated-lower");
          auto up = continue_branch(base, {SweepKind::Omega, w0,
                                           std::min(bc.omega_max, 1.05), bc.step},
                                    seed, "bifurcated-lower");
          BranchCurve merged = reversed_ascending(down);
          merged.samples.insert(merged.samples.end(), up.samples.begin() + 1,
                                up.samples.end());
          manifest.emit("branches_" + tag + "_bifurcated_lower.csv", branch_csv(merged));
          if (up.termination.has_value())
            manifest.note("termination_lower_" + tag,
                          Json{{"omega", up.termination->sweep_value},
                               {"reason", up.termination->reason}});
          ++emitted;
          break;
        } catch (const Error&) {
          continue;
        }
      }
      // at eps = 0 the mirror branch (alpha > 0) exists as well
      if (eps == 0.0) {
        try {
          SystemParams p3 = base;
          p3.omega = 0.9;
          TFState seed = bifurcated_state_eps0(p3, +1);
          auto down = continue_branch(base, {SweepKind::Omega, 0.9, std::max(bc.omega_min, 0.5),
                                             bc.step},
                                      seed, "bifurcated-upper");
          auto up = continue_branch(base, {SweepKind::Omega, 0.9,
                                           std::min(bc.omega_max, 1.05), bc.step},
                                    seed, "bifurcated-upper");
          BranchCurve merged = reversed_ascending(down);
          merged.samples.insert(merged.samples.end(), up.samples.begin() + 1,
                                up.samples.end());
          manifest.emit("branches_" + tag + "_bifurcated_upper.csv", branch_csv(merged));
          ++emitted;
        } catch (const Error& e) {
          manifest.warn("tf-branches " + tag + " mirror: " + e.what());
        }
      }
    }
    if (emitted == 0) emitted_for_all = kExitPartial;
  }
  return emitted_for_all;
}

/// Bifurcation rotation rate for the configured (eps_dd, gamma).
inline int cmd_tf_bifurcation(const RunConfig& cfg, RunManifest& manifest) {
  cfg.params.validate();
  const auto wb = find_bifurcation(cfg.params.eps_dd, cfg.params.gamma);
  Csv csv({"eps_dd", "gamma", "omega_b", "status"});
  if (wb)
    csv.row().add(cfg.params.eps_dd).add(cfg.params.gamma).add(*wb).add(std::string("ok"));
  else
    csv.row()
        .add(cfg.params.eps_dd)
        .add(cfg.params.gamma)
        .add(std::optional<double>{})
        .add(std::string("not-found"));
  manifest.emit("bifurcation.csv", csv.bytes());
  if (wb) manifest.note("omega_b", *wb);
  return wb ? kExitOk : kExitNumeric;
}

/// Rapid-rotation aspect ratio versus the time-averaged-interaction solution
/// (effective coupling -eps_dd/2).
inline int cmd_timeavg_compare(const RunConfig& cfg, RunManifest& manifest) {
  const auto& tc = cfg.timeavg;
  if (tc.gammas.empty() || tc.eps_list.empty())
    throw DomainError("timeavg-compare: empty grids");
  Csv csv({"gamma", "eps_dd", "kappa_perp_at_Omega50", "kappa_par_mapped", "abs_diff",
           "error"});
  int rc = kExitOk;
  for (double gamma : tc.gammas) {
    SystemParams p;
    p.gamma = gamma;
    p.omega = tc.omega;
    TFState state = symmetric_state_eps0(p);
    double cur = 0.0;
    bool lost = false;
    for (double eps : tc.eps_list) {
      if (lost) {
        csv.row().add(gamma).add(eps).add(std::optional<double>{}).add(std::optional<double>{})
            .add(std::optional<double>{}).add(std::string("branch lost"));
        rc = kExitPartial;
        continue;
      }
      try {
        SystemParams q = p;
        q.eps_dd = eps;
        state = continue_in_eps(q, state, cur);
        cur = eps;
        const double kp = kappa_perp(state.kappa_x, state.kappa_y);
        const auto kpar = time_averaged_kappa(-eps / 2.0, gamma);
        if (!kpar) throw ConvergenceError("no time-averaged root");
        csv.row().add(gamma).add(eps).add(kp).add(*kpar).add(std::abs(kp - *kpar)).add(
            std::string());
      } catch (const Error& e) {
        csv.row().add(gamma).add(eps).add(std::optional<double>{}).add(std::optional<double>{})
            .add(std::optional<double>{}).add(std::string(e.what()));
        rc = kExitPartial;
        lost = true;
      }
    }
  }
  manifest.emit("timeavg_compare.csv", csv.bytes());
  return rc;
}

/// Spectrum of the linearized operator at the configured parameter point.
inline int cmd_stability_spectrum(const RunConfig& cfg, RunManifest& manifest) {
  cfg.params.validate();
  TFState tf = continue_in_eps(cfg.params, symmetric_state_eps0(cfg.params), 0.0);
  const auto spec = spectrum(tf, cfg.params, cfg.spectrum_n_max, true);
  Csv csv({"re", "im", "mode_order"});
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i)
    csv.row()
        .add(spec.eigenvalues[i].real())
        .add(spec.eigenvalues[i].imag())
        .add(static_cast<int>(spec.mode_order[i]));
  manifest.emit("spectrum.csv", csv.bytes());
  manifest.note("lambda0", spec.lambda0);
  manifest.note("kappa_x", tf.kappa_x);
  manifest.note("kappa_y", tf.kappa_y);
  manifest.note("alpha", tf.alpha);
  const auto cycles = instability_timescale(spec.lambda0, cfg.params.omega);
  manifest.note("timescale_cycles", cycles ? Json(*cycles) : Json("stable"));
  return kExitOk;
}

/// Instability map over the (Omega, eps_dd) grid: long CSV plus a plain-text
/// PGM raster of lambda0^(1/4) normalized to the map maximum (black = 0,
/// top row = highest eps_dd; failed cells render black).
inline int cmd_stability_map(const RunConfig& cfg, RunManifest& manifest) {
  using namespace cmd_detail;
  const auto& sc = cfg.stability;
  if (sc.omega_count < 1 || sc.eps_count < 1)
    throw DomainError("stability-map: empty grids");
  const auto omegas = linspace(sc.omega_min, sc.omega_max, sc.omega_count);
  const auto eps = linspace(sc.eps_min, sc.eps_max, sc.eps_count);
  const auto rows =
      stability_map(omegas, eps, cfg.params.gamma, sc.n_max, resolve_threads(cfg.threads));

  Csv csv({"Omega", "eps_dd", "lambda0", "lambda0_quarter", "kappa_x", "kappa_y", "alpha",
           "error"});
  int rc = kExitOk;
  double qmax = 0.0;
  for (const auto& e : rows)
    if (e.ok) qmax = std::max(qmax, e.lambda0_quarter);
  for (const auto& e : rows) {
    if (e.ok)
      csv.row().add(e.omega).add(e.eps_dd).add(e.lambda0).add(e.lambda0_quarter)
          .add(e.kappa_x).add(e.kappa_y).add(e.alpha).add(std::string());
    else {
      csv.row().add(e.omega).add(e.eps_dd).add(std::optional<double>{})
          .add(std::optional<double>{}).add(std::optional<double>{})
          .add(std::optional<double>{}).add(std::optional<double>{}).add(e.error);
      rc = kExitPartial;
    }
  }
  manifest.emit("stability_map.csv", csv.bytes());

  std::vector<std::vector<double>> raster(eps.size(), std::vector<double>(omegas.size(), 0.0));
  for (std::size_t r = 0; r < omegas.size(); ++r)
    for (std::size_t c = 0; c < eps.size(); ++c) {
      const auto& e = rows[r * eps.size() + c];
      // top row = largest eps_dd
      if (e.ok && qmax > 0.0) raster[eps.size() - 1 - c][r] = e.lambda0_quarter / qmax;
    }
  manifest.emit("stability_map.pgm", pgm_from_rows(raster));
  manifest.note("lambda0_quarter_max", qmax);
  return rc;
}

/// Imaginary-time ground state at the configured parameters.
inline int cmd_sim_ground(const RunConfig& cfg, RunManifest& manifest) {
  using namespace cmd_detail;
  cfg.params.validate();
  const SimGrid grid = grid_from(cfg.sim);
  GroundStateOptions opt;
  opt.tol = cfg.sim.imag_tol;
  const auto r = ground_state(cfg.params, grid, opt, resolve_threads(cfg.threads));
  const auto [dens, phase] = z0_slices(r.state);
  manifest.emit("ground_density_z0.csv", dens);
  manifest.emit("ground_phase_z0.csv", phase);
  if (cfg.sim.save_fields) {
    manifest.emit("field_ground.bin", field_bytes(r.state));
    manifest.emit("field_ground.txt", field_sidecar(r.state, cfg));
  }
  Simulator sim(cfg.params, grid);
  sim.load(r.state);
  const auto m = sim.moments();
  manifest.note("energy", r.energy);
  manifest.note("mu", r.mu);
  manifest.note("imag_steps", r.steps);
  manifest.note("rz_estimate", std::sqrt(7.0 * m.z2));
  return kExitOk;
}

/// Ground state followed by the eps_dd ramp: time series, checkpoint slices,
/// and the comparison against the stationary-branch prediction.
inline int cmd_sim_ramp(const RunConfig& cfg, RunManifest& manifest) {
  using namespace cmd_detail;
  cfg.params.validate();
  const SimGrid grid = grid_from(cfg.sim);
  const int threads = resolve_threads(cfg.threads);

  SystemParams p0 = cfg.params;
  p0.eps_dd = cfg.sim.eps_start;
  GroundStateOptions gopt;
  gopt.tol = cfg.sim.imag_tol;
  const auto gs = ground_state(p0, grid, gopt, threads);
  manifest.note("ground_energy", gs.energy);
  manifest.note("ground_mu", gs.mu);

  RampProtocol proto;
  proto.rate = cfg.sim.ramp_rate;
  proto.eps_start = cfg.sim.eps_start;
  proto.eps_stop = cfg.sim.eps_stop;
  proto.perturb_amplitude = cfg.sim.perturb_amplitude;
  proto.seed = cfg.seed;
  proto.dt = cfg.sim.dt;
  proto.sample_stride = cfg.sim.sample_stride;
  proto.checkpoints = cfg.sim.checkpoints;

  std::vector<std::pair<std::string, std::string>> slices;
  std::vector<std::pair<std::string, std::string>> fields;
  auto sink = [&](const FieldState& s, double eps) {
    const auto [dens, phase] = z0_slices(s);
    const std::string tag = eps_tag(eps);
    slices.emplace_back("density_z0_eps" + tag + ".csv", dens);
    slices.emplace_back("phase_z0_eps" + tag + ".csv", phase);
    if (cfg.sim.save_fields) {
      fields.emplace_back("field_eps" + tag + ".bin", field_bytes(s));
      fields.emplace_back("field_eps" + tag + ".txt", field_sidecar(s, cfg));
    }
  };
  const auto res = run_ramp(cfg.params, gs.state, proto, sink, threads);

  Csv ts({"t", "eps_dd", "norm", "energy", "x2", "y2", "z2", "xy", "alpha_est"});
  for (const auto& o : res.series)
    ts.row().add(o.t).add(o.eps_dd).add(o.norm).add(o.energy).add(o.x2).add(o.y2).add(o.z2)
        .add(o.xy).add(o.alpha_est);
  manifest.emit("timeseries.csv", ts.bytes());
  for (const auto& [name, content] : slices) manifest.emit(name, content);
  for (const auto& [name, content] : fields) manifest.emit(name, content);

  // stationary-branch overlay: alpha along the continued branch at each
  // sampled eps_dd
  Csv cmp({"eps_dd", "alpha_sim", "alpha_tf", "abs_diff", "error"});
  {
    TFState st = symmetric_state_eps0(p0);
    double cur = 0.0;
    bool lost = false;
    for (const auto& o : res.series) {
      if (o.eps_dd <= 1e-12) {
        cmp.row().add(o.eps_dd).add(o.alpha_est).add(0.0).add(std::abs(o.alpha_est)).add(
            std::string());
        continue;
      }
      if (!lost) {
        try {
          SystemParams q = cfg.params;
          q.eps_dd = o.eps_dd;
          st = continue_in_eps(q, st, cur);
          cur = o.eps_dd;
        } catch (const Error&) {
          lost = true;
        }
      }
      if (lost)
        cmp.row().add(o.eps_dd).add(o.alpha_est).add(std::optional<double>{})
            .add(std::optional<double>{}).add(std::string("branch lost"));
      else
        cmp.row().add(o.eps_dd).add(o.alpha_est).add(st.alpha)
            .add(std::abs(o.alpha_est - st.alpha)).add(std::string());
    }
  }
  manifest.emit("comparison.csv", cmp.bytes());
  manifest.note("snapshots", res.snapshot_eps);
  if (res.aborted) {
    manifest.warn("ramp aborted: " + res.abort_reason);
    manifest.note("aborted", true);
    return kExitNumeric;
  }
  return kExitOk;
}

inline int run_command(const RunConfig& cfg, RunManifest& manifest) {
  if (cfg.task == "tf-branches") return cmd_tf_branches(cfg, manifest);
  if (cfg.task == "tf-bifurcation") return cmd_tf_bifurcation(cfg, manifest);
  if (cfg.task == "timeavg-compare") return cmd_timeavg_compare(cfg, manifest);
  if (cfg.task == "stability-spectrum") return cmd_stability_spectrum(cfg, manifest);
  if (cfg.task == "stability-map") return cmd_stability_map(cfg, manifest);
  if (cfg.task == "sim-ground") return cmd_sim_ground(cfg, manifest);
  if (cfg.task == "sim-ramp") return cmd_sim_ramp(cfg, manifest);
  throw DomainError("unknown task: " + cfg.task);
}

}  // namespace rotodip
