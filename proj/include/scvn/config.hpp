#ifndef SCVN_CONFIG_HPP
#define SCVN_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scvn/errors.hpp"
#include "scvn/knowledge.hpp"
#include "scvn/scenario.hpp"
#include "scvn/solver.hpp"

namespace scvn {

// Full run configuration. Every field has the paper-table default, so an
// empty JSON document {} reproduces the canonical instance.
struct RunConfig {
  struct Scenario {
    int n_vues = 60;
    int lanes = 3;  // per direction
    double lane_width_m = 4.0;
    double cell_radius_m = 500.0;
    double headway_s = 2.5;
    double velocity_kmh = 70.0;
    double tx_dbm = 20.0;
    double noise_dbm = -114.0;
    double shadow_std_db = 8.0;
    double gamma0_db = 25.0;
    std::string interference_mode = "none";  // none | aggregate
    std::string fading = "rayleigh";         // rayleigh | none
  } scenario;

  struct Knowledge {
    int n_kbs = 12;
    int size_min = 1;
    int size_max = 5;
    int capacity = 24;
    double zipf_skew = 1.0;
    double lambda_pps = 100.0;
    double interp_min_s = 5e-3;
    double interp_max_s = 1e-2;
    bool shared_interp = true;
  } knowledge;

  struct Constraints {
    double eta0 = 0.5;
    double theta0 = 0.1;
  } constraints;

  struct Solver {
    int m = 50;
    int z = 100;
    int sigma = 2;
    int tabu_capacity = 50;
    double nu0 = 0.05;
    double tau0 = 0.1;
    std::string p2_backend = "lp";              // lp | greedy
    std::string recovery_mode = "best_feasible";  // best_feasible | last_iterate
  } solver;

  std::uint64_t seed = 1;

  LaneGeometry lane_geometry() const {
    LaneGeometry g;
    g.lanes_per_direction = scenario.lanes;
    g.lane_width_m = scenario.lane_width_m;
    g.cell_radius_m = scenario.cell_radius_m;
    return g;
  }

  ChannelParams channel_params() const {
    ChannelParams p;
    p.tx_power_dbm = scenario.tx_dbm;
    p.noise_power_dbm = scenario.noise_dbm;
    p.shadowing_std_db = scenario.shadow_std_db;
    p.sinr_threshold_db = scenario.gamma0_db;
    p.interference_mode = scenario.interference_mode == "aggregate"
                              ? InterferenceMode::Aggregate
                              : InterferenceMode::None;
    p.fading = scenario.fading == "none" ? FadingMode::None
                                         : FadingMode::Rayleigh;
    return p;
  }

  KnowledgeParams knowledge_params() const {
    KnowledgeParams k;
    k.n_kbs = knowledge.n_kbs;
    k.size_min = knowledge.size_min;
    k.size_max = knowledge.size_max;
    k.capacity = knowledge.capacity;
    k.zipf_skew = knowledge.zipf_skew;
    k.lambda_pps = knowledge.lambda_pps;
    k.interp_min_s = knowledge.interp_min_s;
    k.interp_max_s = knowledge.interp_max_s;
    k.shared_interp = knowledge.shared_interp;
    return k;
  }

  SolverConfig solver_config(int threads = 1) const {
    SolverConfig s;
    s.dual_iterations = solver.m;
    s.tabu_iterations = solver.z;
    s.sigma = solver.sigma;
    s.tabu_capacity = solver.tabu_capacity;
    s.nu0 = solver.nu0;
    s.tau0 = solver.tau0;
    s.p2_backend = solver.p2_backend == "greedy"
                       ? SolverConfig::P2Backend::Greedy
                       : SolverConfig::P2Backend::Lp;
    s.recovery = solver.recovery_mode == "last_iterate"
                     ? SolverConfig::Recovery::LastIterate
                     : SolverConfig::Recovery::BestFeasible;
    s.threads = threads;
    return s;
  }

  void validate() const {
    auto require = [](bool ok, const std::string& msg) {
      if (!ok) throw ValidationError(msg);
    };
    require(scenario.n_vues >= 2, "scenario.n_vues must be >= 2");
    require(scenario.lanes >= 1, "scenario.lanes must be >= 1");
    require(scenario.lane_width_m > 0, "scenario.lane_width_m must be > 0");
    require(scenario.cell_radius_m > 0, "scenario.cell_radius_m must be > 0");
    require(scenario.headway_s > 0, "scenario.headway_s must be > 0");
    require(scenario.velocity_kmh > 0, "scenario.velocity_kmh must be > 0");
    require(scenario.shadow_std_db >= 0, "scenario.shadow_std_db must be >= 0");
    require(scenario.interference_mode == "none" ||
                scenario.interference_mode == "aggregate",
            "scenario.interference_mode must be 'none' or 'aggregate'");
    require(scenario.fading == "rayleigh" || scenario.fading == "none",
            "scenario.fading must be 'rayleigh' or 'none'");
    require(knowledge.n_kbs >= 1 && knowledge.n_kbs <= kMaxKbs,
            "knowledge.n_kbs must be in 1..32");
    require(knowledge.size_min >= 1, "knowledge.size_min must be >= 1");
    require(knowledge.size_max >= knowledge.size_min,
            "knowledge.size_max must be >= size_min");
    require(knowledge.capacity >= 1, "knowledge.capacity must be >= 1");
    require(knowledge.zipf_skew >= 0, "knowledge.zipf_skew must be >= 0");
    require(knowledge.lambda_pps > 0, "knowledge.lambda_pps must be > 0");
    require(knowledge.interp_min_s > 0, "knowledge.interp_min_s must be > 0");
    require(knowledge.interp_max_s >= knowledge.interp_min_s,
            "knowledge.interp_max_s must be >= interp_min_s");
    require(constraints.eta0 >= 0 && constraints.eta0 <= 1,
            "constraints.eta0 must be in [0,1]");
    require(constraints.theta0 >= 0 && constraints.theta0 <= 1,
            "constraints.theta0 must be in [0,1]");
    require(solver.m >= 1, "solver.M must be >= 1");
    require(solver.z >= 0, "solver.Z must be >= 0");
    require(solver.sigma >= 1, "solver.sigma must be >= 1");
    require(solver.tabu_capacity >= 1, "solver.tabu_capacity must be >= 1");
    require(solver.nu0 > 0, "solver.nu0 must be > 0");
    require(solver.tau0 >= 0, "solver.tau0 must be >= 0");
    require(solver.p2_backend == "lp" || solver.p2_backend == "greedy",
            "solver.p2_backend must be 'lp' or 'greedy'");
    require(solver.recovery_mode == "best_feasible" ||
                solver.recovery_mode == "last_iterate",
            "solver.recovery_mode must be 'best_feasible' or 'last_iterate'");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out,
                const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("bad value for ") + where + "." + key);
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object())
    throw ValidationError("config root must be a JSON object");
  detail::reject_unknown_keys(
      doc, {"scenario", "knowledge", "constraints", "solver", "seed"}, "root");

  RunConfig cfg;
  if (doc.contains("scenario")) {
    const auto& s = doc.at("scenario");
    if (!s.is_object()) throw ValidationError("scenario must be an object");
    detail::reject_unknown_keys(
        s,
        {"n_vues", "lanes", "lane_width_m", "cell_radius_m", "headway_s",
         "velocity_kmh", "tx_dbm", "noise_dbm", "shadow_std_db", "gamma0_db",
         "interference_mode", "fading"},
        "scenario");
    detail::read_field(s, "n_vues", cfg.scenario.n_vues, "scenario");
    detail::read_field(s, "lanes", cfg.scenario.lanes, "scenario");
    detail::read_field(s, "lane_width_m", cfg.scenario.lane_width_m, "scenario");
    detail::read_field(s, "cell_radius_m", cfg.scenario.cell_radius_m,
                       "scenario");
    detail::read_field(s, "headway_s", cfg.scenario.headway_s, "scenario");
    detail::read_field(s, "velocity_kmh", cfg.scenario.velocity_kmh,
                       "scenario");
    detail::read_field(s, "tx_dbm", cfg.scenario.tx_dbm, "scenario");
    detail::read_field(s, "noise_dbm", cfg.scenario.noise_dbm, "scenario");
    detail::read_field(s, "shadow_std_db", cfg.scenario.shadow_std_db,
                       "scenario");
    detail::read_field(s, "gamma0_db", cfg.scenario.gamma0_db, "scenario");
    detail::read_field(s, "interference_mode", cfg.scenario.interference_mode,
                       "scenario");
    detail::read_field(s, "fading", cfg.scenario.fading, "scenario");
  }
  if (doc.contains("knowledge")) {
    const auto& k = doc.at("knowledge");
    if (!k.is_object()) throw ValidationError("knowledge must be an object");
    detail::reject_unknown_keys(
        k,
        {"n_kbs", "size_min", "size_max", "capacity", "zipf_skew",
         "lambda_pps", "interp_min_s", "interp_max_s", "shared_interp"},
        "knowledge");
    detail::read_field(k, "n_kbs", cfg.knowledge.n_kbs, "knowledge");
    detail::read_field(k, "size_min", cfg.knowledge.size_min, "knowledge");
    detail::read_field(k, "size_max", cfg.knowledge.size_max, "knowledge");
    detail::read_field(k, "capacity", cfg.knowledge.capacity, "knowledge");
    detail::read_field(k, "zipf_skew", cfg.knowledge.zipf_skew, "knowledge");
    detail::read_field(k, "lambda_pps", cfg.knowledge.lambda_pps, "knowledge");
    detail::read_field(k, "interp_min_s", cfg.knowledge.interp_min_s,
                       "knowledge");
    detail::read_field(k, "interp_max_s", cfg.knowledge.interp_max_s,
                       "knowledge");
    detail::read_field(k, "shared_interp", cfg.knowledge.shared_interp,
                       "knowledge");
  }
  if (doc.contains("constraints")) {
    const auto& c = doc.at("constraints");
    if (!c.is_object()) throw ValidationError("constraints must be an object");
    detail::reject_unknown_keys(c, {"eta0", "theta0"}, "constraints");
    detail::read_field(c, "eta0", cfg.constraints.eta0, "constraints");
    detail::read_field(c, "theta0", cfg.constraints.theta0, "constraints");
  }
  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    if (!s.is_object()) throw ValidationError("solver must be an object");
    detail::reject_unknown_keys(
        s,
        {"M", "Z", "sigma", "tabu_capacity", "nu0", "tau0", "p2_backend",
         "recovery_mode"},
        "solver");
    detail::read_field(s, "M", cfg.solver.m, "solver");
    detail::read_field(s, "Z", cfg.solver.z, "solver");
    detail::read_field(s, "sigma", cfg.solver.sigma, "solver");
    detail::read_field(s, "tabu_capacity", cfg.solver.tabu_capacity, "solver");
    detail::read_field(s, "nu0", cfg.solver.nu0, "solver");
    detail::read_field(s, "tau0", cfg.solver.tau0, "solver");
    detail::read_field(s, "p2_backend", cfg.solver.p2_backend, "solver");
    detail::read_field(s, "recovery_mode", cfg.solver.recovery_mode, "solver");
  }
  detail::read_field(doc, "seed", cfg.seed, "root");

  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config JSON parse error: " + std::string(e.what()));
  }
  return parse_config(doc);
}

}  // namespace scvn

#endif  // SCVN_CONFIG_HPP
