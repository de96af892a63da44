#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotodip/io.hpp"
#include "rotodip/types.hpp"
#include "rotodip/version.hpp"

namespace rotodip {

using Json = nlohmann::json;

struct TfBranchesConfig {
  double omega_min = 0.0, omega_max = 6.0, step = 0.02;
  std::vector<double> eps_list = {0.0, 0.2, 0.4};
};

struct TimeAvgConfig {
  std::vector<double> gammas = {0.5, 1.0, 2.0};
  std::vector<double> eps_list = {0.1, 0.3, 0.5, 0.7, 0.9};
  double omega = 50.0;
};

struct StabilityConfig {
  int n_max = 13;
  double omega_min = 0.5, omega_max = 6.0;
  int omega_count = 12;
  double eps_min = 0.0, eps_max = 0.9;
  int eps_count = 10;
};

struct SimConfig {
  int n = 64;
  double spacing = 0.15;
  double cutoff = 0.0;  ///< absolute, l_perp; 0 selects 0.45 * box length
  double dt = 0.004;
  double ramp_rate = 1e-3;
  double eps_start = 0.0, eps_stop = 0.2;
  double perturb_amplitude = 0.05;
  int sample_stride = 25;
  std::vector<double> checkpoints = {0.05, 0.15, 0.20};
  double imag_tol = 1e-8;
  bool save_fields = false;
};

struct RunConfig {
  std::string task;
  SystemParams params;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0: automatic
  std::string out_dir = "out";
  TfBranchesConfig tf_branches;
  TimeAvgConfig timeavg;
  StabilityConfig stability;
  int spectrum_n_max = 13;
  SimConfig sim;
};

inline void to_json(Json& j, const RunConfig& c) {
  j = Json{
      {"task", c.task},
      {"params",
       {{"gamma", c.params.gamma},
        {"omega", c.params.omega},
        {"eps_dd", c.params.eps_dd},
        {"interaction_scale", c.params.interaction_scale}}},
      {"seed", c.seed},
      {"threads", c.threads},
      {"out_dir", c.out_dir},
      {"tf_branches",
       {{"omega_min", c.tf_branches.omega_min},
        {"omega_max", c.tf_branches.omega_max},
        {"step", c.tf_branches.step},
        {"eps_list", c.tf_branches.eps_list}}},
      {"timeavg",
       {{"gammas", c.timeavg.gammas},
        {"eps_list", c.timeavg.eps_list},
        {"omega", c.timeavg.omega}}},
      {"stability",
       {{"n_max", c.stability.n_max},
        {"omega_min", c.stability.omega_min},
        {"omega_max", c.stability.omega_max},
        {"omega_count", c.stability.omega_count},
        {"eps_min", c.stability.eps_min},
        {"eps_max", c.stability.eps_max},
        {"eps_count", c.stability.eps_count}}},
      {"spectrum", {{"n_max", c.spectrum_n_max}}},
      {"sim",
       {{"n", c.sim.n},
        {"spacing", c.sim.spacing},
        {"cutoff", c.sim.cutoff},
        {"dt", c.sim.dt},
        {"ramp_rate", c.sim.ramp_rate},
        {"eps_start", c.sim.eps_start},
        {"eps_stop", c.sim.eps_stop},
        {"perturb_amplitude", c.sim.perturb_amplitude},
        {"sample_stride", c.sim.sample_stride},
        {"checkpoints", c.sim.checkpoints},
        {"imag_tol", c.sim.imag_tol},
        {"save_fields", c.sim.save_fields}}},
  };
}

namespace config_detail {
template <class T>
void get_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}
}  // namespace config_detail

/// Overlays the fields present in j onto c (missing keys keep defaults).
inline void merge_from_json(const Json& j, RunConfig& c) {
  using config_detail::get_if;
  get_if(j, "task", c.task);
  get_if(j, "seed", c.seed);
  get_if(j, "threads", c.threads);
  get_if(j, "out_dir", c.out_dir);
  if (j.contains("params")) {
    const auto& p = j.at("params");
    get_if(p, "gamma", c.params.gamma);
    get_if(p, "omega", c.params.omega);
    get_if(p, "eps_dd", c.params.eps_dd);
    get_if(p, "interaction_scale", c.params.interaction_scale);
  }
  if (j.contains("tf_branches")) {
    const auto& b = j.at("tf_branches");
    get_if(b, "omega_min", c.tf_branches.omega_min);
    get_if(b, "omega_max", c.tf_branches.omega_max);
    get_if(b, "step", c.tf_branches.step);
    get_if(b, "eps_list", c.tf_branches.eps_list);
  }
  if (j.contains("timeavg")) {
    const auto& b = j.at("timeavg");
    get_if(b, "gammas", c.timeavg.gammas);
    get_if(b, "eps_list", c.timeavg.eps_list);
    get_if(b, "omega", c.timeavg.omega);
  }
  if (j.contains("stability")) {
    const auto& b = j.at("stability");
    get_if(b, "n_max", c.stability.n_max);
    get_if(b, "omega_min", c.stability.omega_min);
    get_if(b, "omega_max", c.stability.omega_max);
    get_if(b, "omega_count", c.stability.omega_count);
    get_if(b, "eps_min", c.stability.eps_min);
    get_if(b, "eps_max", c.stability.eps_max);
    get_if(b, "eps_count", c.stability.eps_count);
  }
  if (j.contains("spectrum")) get_if(j.at("spectrum"), "n_max", c.spectrum_n_max);
  if (j.contains("sim")) {
    const auto& b = j.at("sim");
    get_if(b, "n", c.sim.n);
    get_if(b, "spacing", c.sim.spacing);
    get_if(b, "cutoff", c.sim.cutoff);
    get_if(b, "dt", c.sim.dt);
    get_if(b, "ramp_rate", c.sim.ramp_rate);
    get_if(b, "eps_start", c.sim.eps_start);
    get_if(b, "eps_stop", c.sim.eps_stop);
    get_if(b, "perturb_amplitude", c.sim.perturb_amplitude);
    get_if(b, "sample_stride", c.sim.sample_stride);
    get_if(b, "checkpoints", c.sim.checkpoints);
    get_if(b, "imag_tol", c.sim.imag_tol);
    get_if(b, "save_fields", c.sim.save_fields);
  }
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw DomainError("config: cannot open " + path.string());
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw DomainError(std::string("config: parse error: ") + e.what());
  }
  merge_from_json(j, base);
  return base;
}

/// Run record: resolved config, timing, per-task diagnostics, and the output
/// inventory with content hashes. Written atomically at the end of a run.
class RunManifest {
 public:
  explicit RunManifest(const RunConfig& cfg) : cfg_(cfg) {
    start_ = now_iso();
  }

  void note(const std::string& key, const Json& value) { diagnostics_[key] = value; }
  void warn(const std::string& message) { warnings_.push_back(message); }

  /// Writes content atomically under out_dir and records it in the inventory.
  void emit(const std::string& relative_name, std::string_view content) {
    const auto path = std::filesystem::path(cfg_.out_dir) / relative_name;
    write_file_atomic(path, content);
    outputs_.push_back(Json{{"path", relative_name},
                            {"bytes", content.size()},
                            {"fnv1a64", hex64(fnv1a64(content))}});
  }

  void write() const {
    Json j;
    j["artifact"] = std::string("rotodip ") + kVersion;
    j["config"] = cfg_;
    j["started"] = start_;
    j["finished"] = now_iso();
    j["diagnostics"] = diagnostics_;
    j["warnings"] = warnings_;
    j["outputs"] = outputs_;
    write_file_atomic(std::filesystem::path(cfg_.out_dir) / "manifest.json", j.dump(2) + "\n");
  }

  static std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

 private:
  RunConfig cfg_;
  std::string start_;
  Json diagnostics_ = Json::object();
  std::vector<std::string> warnings_;
  std::vector<Json> outputs_;
};

}  // namespace rotodip
