#ifndef SCVN_EXPERIMENTS_HPP
#define SCVN_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "scvn/baselines.hpp"
#include "scvn/config.hpp"
#include "scvn/errors.hpp"
#include "scvn/instance.hpp"
#include "scvn/parallel.hpp"
#include "scvn/solver.hpp"

namespace scvn {

enum class Method { S4, Dfp, Kfp };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::S4:
      return "s4";
    case Method::Dfp:
      return "dfp";
    default:
      return "kfp";
  }
}

inline Method parse_method(const std::string& name) {
  if (name == "s4") return Method::S4;
  if (name == "dfp") return Method::Dfp;
  if (name == "kfp") return Method::Kfp;
  throw ValidationError("unknown method '" + name + "' (s4|dfp|kfp)");
}

struct PreparedInstance {
  Instance instance;
  int dropped = 0;  // vehicles removed before solving
};

namespace detail {

inline NeighborGraph induce_subgraph(const NeighborGraph& graph,
                                     const std::vector<int>& kept) {
  std::vector<int> index(static_cast<std::size_t>(graph.num_vues), -1);
  for (std::size_t k = 0; k < kept.size(); ++k)
    index[static_cast<std::size_t>(kept[k])] = static_cast<int>(k);
  NeighborGraph sub;
  sub.num_vues = static_cast<int>(kept.size());
  sub.neighbors.assign(kept.size(), {});
  const double neg_inf = -std::numeric_limits<double>::infinity();
  sub.link_sinr_db.assign(kept.size() * kept.size(), neg_inf);
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (int nb : graph.neighbors[static_cast<std::size_t>(kept[a])]) {
      const int b = index[static_cast<std::size_t>(nb)];
      if (b < 0) continue;
      sub.neighbors[a].push_back(b);
      sub.link_sinr_db[a * kept.size() + static_cast<std::size_t>(b)] =
          graph.sinr(kept[a], nb);
    }
  for (auto& n : sub.neighbors) std::sort(n.begin(), n.end());
  return sub;
}

}  // namespace detail

// Generates one trial snapshot. Isolated vehicles can never satisfy the
// single-association constraint and an odd count cannot be perfectly
// paired, so both are dropped up front (isolated first, then the
// worst-connected vehicle while the count is odd). All methods consume the
// identical prepared instance for a given seed.
inline PreparedInstance make_instance(const RunConfig& config,
                                      std::uint64_t seed) {
  config.validate();
  const LaneGeometry geometry = config.lane_geometry();
  const ChannelParams channel = config.channel_params();

  std::vector<VuePlacement> placements = place_vues_count(
      geometry, config.scenario.n_vues, derive_seed(seed, 0x64726f70));
  NeighborGraph graph =
      build_neighbor_graph(placements, channel, derive_seed(seed, 0x67727068));

  std::vector<int> kept(placements.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = static_cast<int>(i);
  std::vector<std::vector<int>> adj = graph.neighbors;

  auto degree_within = [&](int i) {
    int d = 0;
    for (int j : adj[static_cast<std::size_t>(i)])
      for (int k : kept)
        if (k == j) {
          ++d;
          break;
        }
    return d;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < kept.size();) {
      if (degree_within(kept[k]) == 0) {
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
      } else {
        ++k;
      }
    }
    if (!kept.empty() && kept.size() % 2 != 0) {
      std::size_t worst = 0;
      int worst_deg = degree_within(kept[0]);
      for (std::size_t k = 1; k < kept.size(); ++k) {
        const int d = degree_within(kept[k]);
        if (d < worst_deg || (d == worst_deg && kept[k] > kept[worst])) {
          worst = k;
          worst_deg = d;
        }
      }
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(worst));
      changed = true;
    }
  }
  if (kept.size() < 2)
    throw EmptyScenario("drop loop left fewer than two pairable vehicles");

  PreparedInstance out;
  out.dropped = static_cast<int>(placements.size() - kept.size());
  out.instance.graph = detail::induce_subgraph(graph, kept);
  out.instance.placements.reserve(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    VuePlacement p = placements[static_cast<std::size_t>(kept[k])];
    p.vue_id = static_cast<int>(k);
    out.instance.placements.push_back(p);
  }
  auto [library, profiles] = make_knowledge(
      config.knowledge_params(), static_cast<int>(kept.size()), seed);
  out.instance.library = std::move(library);
  out.instance.profiles = std::move(profiles);
  out.instance.eta0 = config.constraints.eta0;
  out.instance.theta0 = config.constraints.theta0;
  return out;
}

struct TrialConfig {
  RunConfig run;
  Method method = Method::S4;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct TrialResult {
  bool failed = false;
  std::string error;
  double latency_s = 0.0;  // mean delay over matched directed pairs
  double tsp_pps = 0.0;    // mean throughput over matched pairs
  double eta_bar = 0.0;
  double rho_bar = 0.0;
  int unmatched = 0;  // dropped before solving plus stranded by pairing
  int vues = 0;
  int matched_pairs = 0;
  int unstable_directions = 0;
  double objective = kInf;
  bool solver_feasible = false;
  ConstraintReport report;
  std::vector<IterationDiag> trace;  // S4 only
};

namespace detail {

inline void fill_pair_metrics(const Instance& inst, const KbcPolicy& kbc,
                              const VspMatching& matching, TrialResult& out) {
  const int v = inst.num_vues();
  double delay_sum = 0.0;
  int delay_count = 0;
  double tsp_sum = 0.0;
  int pair_count = 0;
  double rho_sum = 0.0;
  int rho_count = 0;
  double eta_sum = 0.0;

  for (int i = 0; i < v; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    eta_sum += preference_satisfaction(kbc.rows[ui], inst.profiles[ui]);
    const int j = matching.partner[ui];
    if (j < 0) continue;
    const PairDirectionEval ev = evaluate_direction(
        kbc.rows[ui], kbc.rows[static_cast<std::size_t>(j)], inst.profiles[ui],
        inst.profiles[static_cast<std::size_t>(j)]);
    if (ev.stable) {
      delay_sum += ev.delay;
      ++delay_count;
    } else {
      ++out.unstable_directions;
    }
    rho_sum += 1.0 - ev.theta;
    ++rho_count;
    if (j > i) {
      const PairDirectionEval back = evaluate_direction(
          kbc.rows[static_cast<std::size_t>(j)], kbc.rows[ui],
          inst.profiles[static_cast<std::size_t>(j)], inst.profiles[ui]);
      tsp_sum += pair_tsp(ev, back);
      ++pair_count;
    }
  }

  out.vues = v;
  out.matched_pairs = pair_count;
  out.latency_s = delay_count > 0 ? delay_sum / delay_count : 0.0;
  out.tsp_pps = pair_count > 0 ? tsp_sum / pair_count : 0.0;
  out.eta_bar = v > 0 ? eta_sum / v : 0.0;
  out.rho_bar = rho_count > 0 ? rho_sum / rho_count : 0.0;
  out.unmatched += v - 2 * pair_count;
}

}  // namespace detail

inline TrialResult run_trial(const TrialConfig& trial) {
  TrialResult out;
  try {
    const PreparedInstance prep = make_instance(trial.run, trial.seed);
    const Instance& inst = prep.instance;
    out.unmatched = prep.dropped;

    if (trial.method == Method::S4) {
      SolverConfig sc = trial.run.solver_config(trial.threads);
      const SolverResult res = run_s4(inst, sc);
      out.objective = res.objective;
      out.solver_feasible = res.feasible;
      out.report = res.report;
      out.trace = res.trace;
      detail::fill_pair_metrics(inst, res.kbc, res.matching, out);
    } else {
      KbcPolicy kbc;
      kbc.n_kbs = inst.n_kbs();
      kbc.rows.resize(static_cast<std::size_t>(inst.num_vues()));
      for (int i = 0; i < inst.num_vues(); ++i) {
        Rng rng = make_rng(derive_seed(trial.seed, 0x70666b62, i));
        kbc.rows[static_cast<std::size_t>(i)] = preference_first_kbc(
            inst.profiles[static_cast<std::size_t>(i)], inst.library,
            inst.eta0, rng);
      }
      const VspMatching matching =
          trial.method == Method::Dfp
              ? dfp_matching(inst.placements, inst.graph)
              : kfp_matching(inst.graph, kbc, inst.profiles);
      out.report = check_feasibility(inst, kbc, matching);
      out.solver_feasible = out.report.feasible();
      out.objective = primal_objective(inst, kbc, matching);
      detail::fill_pair_metrics(inst, kbc, matching, out);
    }
  } catch (const Error& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

struct MetricRow {
  std::string method;
  std::string param = "none";
  double value = 0.0;
  double latency_s = 0.0, latency_se = 0.0;
  double tsp_pps = 0.0, tsp_se = 0.0;
  double eta_bar = 0.0, eta_se = 0.0;
  double rho_bar = 0.0, rho_se = 0.0;
  double unmatched = 0.0;
  int trials = 0;  // successful trials aggregated
};

inline MetricRow aggregate_trials(const std::vector<TrialResult>& results,
                                  const std::string& method,
                                  const std::string& param, double value) {
  MetricRow row;
  row.method = method;
  row.param = param;
  row.value = value;

  std::vector<const TrialResult*> ok;
  for (const TrialResult& r : results)
    if (!r.failed) ok.push_back(&r);
  row.trials = static_cast<int>(ok.size());
  if (ok.empty()) return row;

  auto mean_se = [&](auto&& get, double& mean, double& se) {
    double sum = 0.0;
    for (const TrialResult* r : ok) sum += get(*r);
    mean = sum / static_cast<double>(ok.size());
    if (ok.size() > 1) {
      double ss = 0.0;
      for (const TrialResult* r : ok) {
        const double d = get(*r) - mean;
        ss += d * d;
      }
      se = std::sqrt(ss / (static_cast<double>(ok.size()) - 1.0) /
                     static_cast<double>(ok.size()));
    }
  };
  mean_se([](const TrialResult& r) { return r.latency_s; }, row.latency_s,
          row.latency_se);
  mean_se([](const TrialResult& r) { return r.tsp_pps; }, row.tsp_pps,
          row.tsp_se);
  mean_se([](const TrialResult& r) { return r.eta_bar; }, row.eta_bar,
          row.eta_se);
  mean_se([](const TrialResult& r) { return r.rho_bar; }, row.rho_bar,
          row.rho_se);
  double um = 0.0, um_se = 0.0;
  mean_se([](const TrialResult& r) { return static_cast<double>(r.unmatched); },
          um, um_se);
  row.unmatched = um;
  return row;
}

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> params = {"V",    "N",      "xi",
                                                  "eta0", "theta0", "C"};
  return params;
}

inline void apply_sweep_param(RunConfig& config, const std::string& param,
                              double value) {
  if (param == "V")
    config.scenario.n_vues = static_cast<int>(value);
  else if (param == "N")
    config.knowledge.n_kbs = static_cast<int>(value);
  else if (param == "xi")
    config.knowledge.zipf_skew = value;
  else if (param == "eta0")
    config.constraints.eta0 = value;
  else if (param == "theta0")
    config.constraints.theta0 = value;
  else if (param == "C")
    config.knowledge.capacity = static_cast<int>(value);
  else
    throw ValidationError("unknown sweep parameter '" + param +
                          "' (V|N|xi|eta0|theta0|C)");
  config.validate();
}

// One row per (method, value), each aggregated over trials_per_point seeded
// trials. Per-point seeds derive from the master seed and are shared across
// methods, so every method sees identical scenarios.
inline std::vector<MetricRow> run_sweep(const RunConfig& base,
                                        const std::string& param,
                                        const std::vector<double>& values,
                                        int trials_per_point,
                                        const std::vector<Method>& methods,
                                        int threads = 1) {
  if (trials_per_point < 1)
    throw ValidationError("trials_per_point must be >= 1");
  std::vector<MetricRow> rows;
  for (Method method : methods) {
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
      RunConfig cfg = base;
      apply_sweep_param(cfg, param, values[vi]);
      std::vector<TrialResult> results(
          static_cast<std::size_t>(trials_per_point));
      parallel_for(results.size(), threads, [&](std::size_t k) {
        TrialConfig tc;
        tc.run = cfg;
        tc.method = method;
        tc.seed = derive_seed(base.seed, 0x73776570, vi, k);
        tc.threads = 1;
        results[k] = run_trial(tc);
      });
      rows.push_back(aggregate_trials(results, method_name(method), param,
                                      values[vi]));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV output.
// ---------------------------------------------------------------------------
inline const char* kMetricsCsvHeader =
    "method,param,value,latency_s,latency_se,tsp_pps,tsp_se,eta_bar,eta_se,"
    "rho_bar,rho_se,unmatched,trials";

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string format_metric_row(const MetricRow& row) {
  std::string s = row.method;
  s += ',';
  s += row.param;
  for (double v : {row.value, row.latency_s, row.latency_se, row.tsp_pps,
                   row.tsp_se, row.eta_bar, row.eta_se, row.rho_bar,
                   row.rho_se, row.unmatched}) {
    s += ',';
    s += format_g9(v);
  }
  s += ',';
  s += std::to_string(row.trials);
  return s;
}

inline void emit_csv(const std::vector<MetricRow>& rows, std::ostream& out) {
  out << kMetricsCsvHeader << '\n';
  for (const MetricRow& row : rows) out << format_metric_row(row) << '\n';
}

inline void emit_csv(const std::vector<MetricRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CSV file: " + path);
  emit_csv(rows, out);
  if (!out) throw IoError("write failed: " + path);
}

inline void emit_diagnostics_csv(const std::vector<IterationDiag>& trace,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write diagnostics CSV: " + path);
  out << "t,dual_value,incumbent_objective,max_theta_slack\n";
  for (const IterationDiag& d : trace)
    out << d.t << ',' << format_g9(d.dual_value) << ','
        << format_g9(d.incumbent_objective) << ','
        << format_g9(d.max_theta_slack) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace scvn

#endif  // SCVN_EXPERIMENTS_HPP
