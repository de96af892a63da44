#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "rotodip/commands.hpp"
#include "rotodip/version.hpp"

using namespace rotodip;

namespace {

void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset.empty()) return;
  if (preset == "desk") {
    cfg.sim.n = 64;
    cfg.sim.spacing = 0.18;
    cfg.params.interaction_scale = 200.0;
  } else if (preset == "paper") {
    cfg.sim.n = 192;
    cfg.sim.spacing = 0.15;
    cfg.params.interaction_scale = 5655.0;
  } else {
    throw DomainError("unknown preset: " + preset);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("rotodip ") + kVersion +
               " - rotating-polarization dipolar condensate toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;

  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides config)");
  app.add_option("--threads", threads, "worker threads, 0 = automatic (overrides config)");
  app.add_option("--preset", preset, "parameter preset: paper or desk");

  const char* tasks[] = {"tf-branches",    "tf-bifurcation",     "timeavg-compare",
                         "stability-spectrum", "stability-map",  "sim-ground",
                         "sim-ramp"};
  for (const char* t : tasks) app.add_subcommand(t)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    RunConfig cfg;
    apply_preset(cfg, preset);
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    cfg.task = app.get_subcommands().front()->get_name();
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;

    RunManifest manifest(cfg);
    int rc = kExitNumeric;
    try {
      rc = run_command(cfg, manifest);
    } catch (...) {
      manifest.warn("run aborted by exception");
      manifest.write();
      throw;
    }
    manifest.write();
    std::printf("%s: %s (exit %d), outputs in %s\n", cfg.task.c_str(),
                rc == kExitOk ? "ok" : rc == kExitPartial ? "partial" : "failed", rc,
                cfg.out_dir.c_str());
    return rc;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
}
