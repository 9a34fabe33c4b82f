#ifndef SCVN_VALIDATION_HPP
#define SCVN_VALIDATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scvn/instance.hpp"
#include "scvn/knowledge.hpp"
#include "scvn/queueing.hpp"
#include "scvn/rng.hpp"
#include "scvn/solver.hpp"

namespace scvn {

// ---------------------------------------------------------------------------
// Random stable two-vehicle queue configurations for the analytic-vs-DES
// comparison. Arrival rates are back-solved from a drawn utilization in
// [0.15, 0.8], so stability holds by construction with a healthy margin.
// ---------------------------------------------------------------------------
struct PairQueueSample {
  VueProfile sender;
  VueProfile receiver;
  KbMask alpha_i = 0;
  KbMask alpha_j = 0;
};

inline PairQueueSample random_stable_pair_config(Rng& rng) {
  PairQueueSample s;
  const int n_kbs = uniform_int(rng, 1, 8);
  const double skew = uniform_range(rng, 0.0, 2.0);

  s.sender.id = 0;
  s.sender.pref = make_preference_profile(n_kbs, skew, rng);
  s.receiver.id = 1;
  s.receiver.pref = make_preference_profile(n_kbs, skew, rng);
  s.sender.interp_rate.resize(static_cast<std::size_t>(n_kbs));
  s.receiver.interp_rate.resize(static_cast<std::size_t>(n_kbs));
  for (int n = 0; n < n_kbs; ++n) {
    s.sender.interp_rate[static_cast<std::size_t>(n)] =
        1.0 / uniform_range(rng, 5e-3, 1e-2);
    s.receiver.interp_rate[static_cast<std::size_t>(n)] =
        1.0 / uniform_range(rng, 5e-3, 1e-2);
  }

  // Random masks with a nonempty shared set.
  const KbMask full = kb_full(n_kbs);
  do {
    s.alpha_i = rng() & full;
    s.alpha_j = rng() & full;
  } while ((s.alpha_i & s.alpha_j) == 0);

  // Back-solve the total arrival rate from the drawn utilization:
  // rho = lambda * sum_shared p_i / mu_j.
  double a = 0.0;
  for (int n = 0; n < n_kbs; ++n)
    if (kb_in(s.alpha_i & s.alpha_j, n))
      a += s.sender.pref.popularity[static_cast<std::size_t>(n)] /
           s.receiver.interp_rate[static_cast<std::size_t>(n)];
  const double rho = uniform_range(rng, 0.15, 0.8);
  s.sender.arrival_rate = rho / a;
  s.receiver.arrival_rate = s.sender.arrival_rate;
  return s;
}

struct QueueValidationResult {
  int configs = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.02;
  bool all_within = true;
};

inline QueueValidationResult validate_queue_against_des(int n_configs,
                                                        std::size_t packets,
                                                        std::uint64_t seed,
                                                        double tolerance) {
  QueueValidationResult out;
  out.configs = n_configs;
  out.tolerance = tolerance;
  Rng rng = make_rng(derive_seed(seed, 0x71636667));
  for (int k = 0; k < n_configs; ++k) {
    const PairQueueSample s = random_stable_pair_config(rng);
    const double analytic =
        pk_queuing_latency(s.alpha_i, s.alpha_j, s.sender, s.receiver);
    const DesResult des =
        des_mg1_oracle(s.alpha_i, s.alpha_j, s.sender, s.receiver, packets,
                       derive_seed(seed, 0x64657371, k));
    const double rel = std::abs(des.mean_wait - analytic) / analytic;
    out.max_rel_error = std::max(out.max_rel_error, rel);
    if (rel > tolerance) out.all_within = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random tiny instances for the exhaustive-oracle checks.
// ---------------------------------------------------------------------------
inline Instance random_tiny_instance(Rng& rng, int num_vues = 4,
                                     int max_kbs = 3) {
  Instance inst;
  const int n_kbs = uniform_int(rng, 2, max_kbs);
  inst.library.sizes.resize(static_cast<std::size_t>(n_kbs));
  for (int n = 0; n < n_kbs; ++n)
    inst.library.sizes[static_cast<std::size_t>(n)] = uniform_int(rng, 1, 3);

  const double skew = uniform_range(rng, 0.3, 1.5);
  for (int i = 0; i < num_vues; ++i) {
    VueProfile p;
    p.id = i;
    p.capacity = uniform_int(rng, 2, 6);
    // Rates in [100,200] against arrivals up to 150 exercise both stable
    // and unstable candidate regions.
    p.arrival_rate = uniform_range(rng, 20.0, 150.0);
    p.pref = make_preference_profile(n_kbs, skew, rng);
    p.interp_rate.resize(static_cast<std::size_t>(n_kbs));
    for (int n = 0; n < n_kbs; ++n)
      p.interp_rate[static_cast<std::size_t>(n)] =
          uniform_range(rng, 100.0, 200.0);
    inst.profiles.push_back(std::move(p));
    VuePlacement pl;
    pl.vue_id = i;
    pl.position = {static_cast<double>(i) * 50.0, 0.0};
    inst.placements.push_back(pl);
  }

  // Topology: complete graph, 4-cycle or path (all admit a perfect
  // matching for even counts).
  inst.graph.num_vues = num_vues;
  inst.graph.neighbors.assign(static_cast<std::size_t>(num_vues), {});
  inst.graph.link_sinr_db.assign(
      static_cast<std::size_t>(num_vues) * num_vues,
      -std::numeric_limits<double>::infinity());
  auto link = [&](int i, int j) {
    inst.graph.neighbors[static_cast<std::size_t>(i)].push_back(j);
    inst.graph.neighbors[static_cast<std::size_t>(j)].push_back(i);
    inst.graph.link_sinr_db[static_cast<std::size_t>(i) * num_vues + j] = 30.0;
    inst.graph.link_sinr_db[static_cast<std::size_t>(j) * num_vues + i] = 30.0;
  };
  const int topology = uniform_int(rng, 0, 2);
  if (topology == 0 || num_vues != 4) {
    for (int i = 0; i < num_vues; ++i)
      for (int j = i + 1; j < num_vues; ++j) link(i, j);
  } else if (topology == 1) {  // cycle 0-1-2-3
    link(0, 1);
    link(1, 2);
    link(2, 3);
    link(0, 3);
  } else {  // path 0-1-2-3
    link(0, 1);
    link(1, 2);
    link(2, 3);
  }
  for (auto& nb : inst.graph.neighbors) std::sort(nb.begin(), nb.end());

  const double eta_choices[] = {0.0, 0.3, 0.5};
  const double theta_choices[] = {0.05, 0.1, 0.3, 1.0};
  inst.eta0 = eta_choices[uniform_int(rng, 0, 2)];
  inst.theta0 = theta_choices[uniform_int(rng, 0, 3)];
  return inst;
}

struct OracleCheckStats {
  int instances = 0;
  int infeasible_skipped = 0;   // oracle found no feasible point at all
  int tau_checks = 0;
  int prop2_failures = 0;
  int prop1_failures = 0;
  int duality_points = 0;
  int duality_violations = 0;
  int gap_total = 0;
  int gap_within_5pct = 0;
  double max_gap_rel = 0.0;

  bool ok() const {
    return prop2_failures == 0 && prop1_failures == 0 &&
           duality_violations == 0 &&
           (gap_total == 0 ||
            gap_within_5pct * 10 >= gap_total * 9);  // >= 90%
  }
};

// Compares the two-stage solve against full enumeration on one tiny
// instance: proposition checks per multiplier vector, weak duality along a
// short dual run, and the end-to-end optimality gap.
inline void oracle_check_instance(const Instance& inst, std::uint64_t seed,
                                  int taus_per_instance,
                                  OracleCheckStats& stats) {
  SolverConfig sc;
  sc.exhaustive_p1 = true;
  sc.dual_iterations = 12;
  sc.threads = 1;

  const OracleResult p0 = exhaustive_oracle_p0(inst);
  Rng rng = make_rng(derive_seed(seed, 0x6f726368));

  for (int k = 0; k < taus_per_instance; ++k) {
    std::vector<double> tau(static_cast<std::size_t>(inst.num_vues()));
    for (double& t : tau) t = uniform_range(rng, 0.0, 0.5);

    const OracleResult inner = exhaustive_inner_optimum(inst, tau);
    bool two_stage_ok = true;
    TwoStageSolution stage;
    try {
      stage = solve_two_stage(inst, tau, sc);
    } catch (const InfeasiblePairing&) {
      two_stage_ok = false;
    }
    ++stats.tau_checks;

    if (!inner.found || !two_stage_ok) {
      // Both routes must agree that no complete pairing exists.
      if (inner.found != (two_stage_ok && stage.matching.complete()))
        ++stats.prop2_failures;
      continue;
    }
    if (!stage.matching.complete()) {
      ++stats.prop2_failures;
      continue;
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(inner.objective));
    if (std::abs(stage.attained_lagrangian - inner.objective) > tol)
      ++stats.prop2_failures;

    // Proposition 1: each vehicle's optimal row must appear as the stored
    // sub-policy of one of its pair subproblems.
    for (int i = 0; i < inst.num_vues(); ++i) {
      bool found_row = false;
      for (int j : inst.graph.neighbors[static_cast<std::size_t>(i)]) {
        const OmegaEntry& e = stage.omega.entry(i, j);
        if (!e.feasible) continue;
        const KbMask stored = i < j ? e.alpha_i : e.alpha_j;
        if (stored == inner.kbc.rows[static_cast<std::size_t>(i)]) {
          found_row = true;
          break;
        }
      }
      if (!found_row) {
        ++stats.prop1_failures;
        break;
      }
    }
  }

  if (!p0.found) {
    ++stats.infeasible_skipped;
    return;
  }

  // Weak duality plus the end-to-end gap on a short dual run.
  try {
    const SolverResult res = run_s4(inst, sc);
    for (const IterationDiag& d : res.trace) {
      ++stats.duality_points;
      if (d.dual_value > p0.objective + 1e-9) ++stats.duality_violations;
    }
    ++stats.gap_total;
    if (res.feasible) {
      const double gap =
          (res.objective - p0.objective) / std::max(p0.objective, 1e-30);
      stats.max_gap_rel = std::max(stats.max_gap_rel, gap);
      if (gap <= 0.05 + 1e-9) ++stats.gap_within_5pct;
    }
  } catch (const InfeasiblePairing&) {
    // Oracle found a feasible point but the pairing graph broke: count as
    // a missed gap case.
    ++stats.gap_total;
  }
}

inline OracleCheckStats run_oracle_checks(int n_instances, std::uint64_t seed,
                                          int taus_per_instance = 3,
                                          int max_kbs = 3) {
  OracleCheckStats stats;
  stats.instances = n_instances;
  Rng rng = make_rng(derive_seed(seed, 0x74696e79));
  for (int k = 0; k < n_instances; ++k) {
    const Instance inst = random_tiny_instance(rng, 4, max_kbs);
    oracle_check_instance(inst, derive_seed(seed, 0x6f69, k),
                          taus_per_instance, stats);
  }
  return stats;
}

// Spearman rank correlation; the monotone-trend checks expect +-1 on small
// sweeps with distinct values.
inline double spearman_rho(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      r[idx[i]] = static_cast<double>(i + 1);
    return r;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mean = (n + 1.0) / 2.0, num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace scvn

#endif  // SCVN_VALIDATION_HPP
