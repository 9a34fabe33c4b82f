#ifndef SCVN_SOLVER_HPP
#define SCVN_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "scvn/errors.hpp"
#include "scvn/instance.hpp"
#include "scvn/knowledge.hpp"
#include "scvn/lp.hpp"
#include "scvn/parallel.hpp"
#include "scvn/queueing.hpp"

namespace scvn {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SolverConfig {
  int dual_iterations = 50;   // M
  int tabu_iterations = 100;  // Z
  int sigma = 2;              // neighborhood radius (bit flips)
  int tabu_capacity = 50;
  double nu0 = 0.05;  // stepsize scale, nu(t) = nu0 / sqrt(t+1)
  double tau0 = 0.1;  // initial multipliers
  enum class P2Backend { Lp, Greedy } p2_backend = P2Backend::Lp;
  enum class Recovery { BestFeasible, LastIterate } recovery =
      Recovery::BestFeasible;
  bool exhaustive_p1 = false;  // replace tabu search by full enumeration
  int threads = 1;             // worker threads for the pair subproblems

  double stepsize(int t) const { return nu0 / std::sqrt(t + 1.0); }

  void validate() const {
    if (dual_iterations < 1) throw ValidationError("M must be >= 1");
    if (tabu_iterations < 0) throw ValidationError("Z must be >= 0");
    if (sigma < 1) throw ValidationError("sigma must be >= 1");
    if (tabu_capacity < 1) throw ValidationError("tabu_capacity must be >= 1");
    if (!(nu0 > 0.0)) throw ValidationError("nu0 must be > 0");
    if (tau0 < 0.0) throw ValidationError("tau0 must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Per-pair joint construction problem. A candidate is 2N bits in one word:
// sender-side mask in the low N bits, partner mask shifted by N. All sums the
// cost needs are linear over bits, so candidates one or two flips away are
// evaluated by delta updates on a small accumulator state.
// ---------------------------------------------------------------------------
class PairProblem {
 public:
  PairProblem(const KbLibrary& library, const VueProfile& vue_i,
              const VueProfile& vue_j, double eta0, double tau_i, double tau_j)
      : n_(library.count()),
        eta0_(eta0),
        tau_i_(tau_i),
        tau_j_(tau_j),
        lambda_i_(vue_i.arrival_rate),
        lambda_j_(vue_j.arrival_rate),
        cap_i_(vue_i.capacity),
        cap_j_(vue_j.capacity) {
    size_.resize(static_cast<std::size_t>(n_));
    pi_.resize(static_cast<std::size_t>(n_));
    pj_.resize(static_cast<std::size_t>(n_));
    cij_.resize(static_cast<std::size_t>(n_));
    cij2_.resize(static_cast<std::size_t>(n_));
    cji_.resize(static_cast<std::size_t>(n_));
    cji2_.resize(static_cast<std::size_t>(n_));
    for (int n = 0; n < n_; ++n) {
      const auto u = static_cast<std::size_t>(n);
      size_[u] = library.sizes[u];
      pi_[u] = vue_i.pref.popularity[u];
      pj_[u] = vue_j.pref.popularity[u];
      cij_[u] = pi_[u] / vue_j.interp_rate[u];
      cij2_[u] = cij_[u] * cij_[u];
      cji_[u] = pj_[u] / vue_i.interp_rate[u];
      cji2_[u] = cji_[u] * cji_[u];
    }
  }

  int n_kbs() const { return n_; }
  int bits() const { return 2 * n_; }
  double tau_i() const { return tau_i_; }
  double tau_j() const { return tau_j_; }

  static KbMask mask_i(KbMask pair, int n_kbs) { return pair & kb_full(n_kbs); }
  static KbMask mask_j(KbMask pair, int n_kbs) { return pair >> n_kbs; }
  static KbMask make_pair_mask(KbMask mi, KbMask mj, int n_kbs) {
    return mi | (mj << n_kbs);
  }

  struct State {
    int stor_i = 0, stor_j = 0;
    double eta_i = 0.0, eta_j = 0.0;   // also the offered popularity mass T
    double s_ij = 0.0, a_ij = 0.0, b_ij = 0.0;  // shared sums, direction i->j
    double s_ji = 0.0, a_ji = 0.0, b_ji = 0.0;  // shared sums, direction j->i
  };

  struct Eval {
    bool feasible = false;  // storage + eta threshold + both queues stable
    double omega = kInf;
    double delta_ij = 0.0, delta_ji = 0.0;
    double theta_ij = 0.0, theta_ji = 0.0;
  };

  State build_state(KbMask pair) const {
    State st;
    for (int n = 0; n < n_; ++n) {
      const auto u = static_cast<std::size_t>(n);
      const bool bi = (pair >> n) & 1ULL;
      const bool bj = (pair >> (n_ + n)) & 1ULL;
      if (bi) {
        st.stor_i += size_[u];
        st.eta_i += pi_[u];
      }
      if (bj) {
        st.stor_j += size_[u];
        st.eta_j += pj_[u];
      }
      if (bi && bj) {
        st.s_ij += pi_[u];
        st.a_ij += cij_[u];
        st.b_ij += cij2_[u];
        st.s_ji += pj_[u];
        st.a_ji += cji_[u];
        st.b_ji += cji2_[u];
      }
    }
    return st;
  }

  // Toggles one bit of the pair mask, updating the accumulator state. The
  // shared-set adjustment consults the current other-side bit, so flips must
  // be applied (and the mask updated) one at a time.
  void apply_flip(State& st, KbMask& pair, int bit) const {
    if (bit < n_) {
      const int n = bit;
      const auto u = static_cast<std::size_t>(n);
      const double sign = ((pair >> n) & 1ULL) ? -1.0 : 1.0;
      st.stor_i += static_cast<int>(sign) * size_[u];
      st.eta_i += sign * pi_[u];
      if ((pair >> (n_ + n)) & 1ULL) {
        st.s_ij += sign * pi_[u];
        st.a_ij += sign * cij_[u];
        st.b_ij += sign * cij2_[u];
        st.s_ji += sign * pj_[u];
        st.a_ji += sign * cji_[u];
        st.b_ji += sign * cji2_[u];
      }
    } else {
      const int n = bit - n_;
      const auto u = static_cast<std::size_t>(n);
      const double sign = ((pair >> bit) & 1ULL) ? -1.0 : 1.0;
      st.stor_j += static_cast<int>(sign) * size_[u];
      st.eta_j += sign * pj_[u];
      if ((pair >> n) & 1ULL) {
        st.s_ij += sign * pi_[u];
        st.a_ij += sign * cij_[u];
        st.b_ij += sign * cij2_[u];
        st.s_ji += sign * pj_[u];
        st.a_ji += sign * cji_[u];
        st.b_ji += sign * cji2_[u];
      }
    }
    pair ^= (1ULL << bit);
  }

  Eval finalize(const State& st) const {
    Eval e;
    if (st.stor_i > cap_i_ || st.stor_j > cap_j_) return e;
    if (st.eta_i < eta0_ - kEtaTol || st.eta_j < eta0_ - kEtaTol) return e;
    const double util_ij = lambda_i_ * st.a_ij;
    const double util_ji = lambda_j_ * st.a_ji;
    if (util_ij >= 1.0 || util_ji >= 1.0) return e;
    e.feasible = true;
    if (st.s_ij > 0.0)
      e.delta_ij = lambda_i_ * (st.a_ij * st.a_ij + st.b_ij) /
                   (2.0 * st.s_ij * (1.0 - util_ij));
    if (st.s_ji > 0.0)
      e.delta_ji = lambda_j_ * (st.a_ji * st.a_ji + st.b_ji) /
                   (2.0 * st.s_ji * (1.0 - util_ji));
    e.theta_ij = st.eta_i > 0.0 ? (st.eta_i - st.s_ij) / st.eta_i : 0.0;
    e.theta_ji = st.eta_j > 0.0 ? (st.eta_j - st.s_ji) / st.eta_j : 0.0;
    e.omega = e.delta_ij + e.delta_ji + tau_i_ * e.theta_ij +
              tau_j_ * e.theta_ji;
    return e;
  }

  Eval evaluate(KbMask pair) const { return finalize(build_state(pair)); }

  // Joint storage of an identical-set selection against the tighter side.
  bool fits_both(int used) const { return used <= cap_i_ && used <= cap_j_; }

  double pref_sum(int n) const {
    const auto u = static_cast<std::size_t>(n);
    return pi_[u] + pj_[u];
  }
  int kb_size(int n) const { return size_[static_cast<std::size_t>(n)]; }
  double eta0() const { return eta0_; }
  double pop_i(int n) const { return pi_[static_cast<std::size_t>(n)]; }
  double pop_j(int n) const { return pj_[static_cast<std::size_t>(n)]; }

 private:
  int n_;
  double eta0_, tau_i_, tau_j_;
  double lambda_i_, lambda_j_;
  int cap_i_, cap_j_;
  std::vector<int> size_;
  std::vector<double> pi_, pj_, cij_, cij2_, cji_, cji2_;
};

// Pair cost omega = (delta_ij + tau_i theta_ij) + (delta_ji + tau_j theta_ji).
inline double pair_cost_omega(KbMask alpha_i, KbMask alpha_j,
                              const VueProfile& vue_i, const VueProfile& vue_j,
                              double tau_i, double tau_j) {
  const PairDirectionEval ij = evaluate_direction(alpha_i, alpha_j, vue_i, vue_j);
  const PairDirectionEval ji = evaluate_direction(alpha_j, alpha_i, vue_j, vue_i);
  if (!ij.stable)
    throw UnstableQueue("i->j direction unstable", ij.utilization);
  if (!ji.stable)
    throw UnstableQueue("j->i direction unstable", ji.utilization);
  return ij.delay + ji.delay + tau_i * ij.theta + tau_j * ji.theta;
}

// ---------------------------------------------------------------------------
// Initial feasible solution: grow an identical KB set by highest joint
// preference until both satisfaction thresholds hold; a capacity overrun
// evicts the largest selected KB (for good, it cannot re-enter).
// ---------------------------------------------------------------------------
inline KbMask initial_feasible_kbc(const PairProblem& prob) {
  const int n_kbs = prob.n_kbs();
  std::vector<bool> available(static_cast<std::size_t>(n_kbs), true);
  std::vector<bool> selected(static_cast<std::size_t>(n_kbs), false);
  double eta_i = 0.0, eta_j = 0.0;
  int used = 0;

  while (eta_i < prob.eta0() - kEtaTol || eta_j < prob.eta0() - kEtaTol) {
    int pick = -1;
    double best = -1.0;
    for (int n = 0; n < n_kbs; ++n)
      if (available[static_cast<std::size_t>(n)] && prob.pref_sum(n) > best) {
        best = prob.pref_sum(n);
        pick = n;
      }
    if (pick < 0)
      throw InfeasiblePair("joint preference growth exhausted all KBs");
    available[static_cast<std::size_t>(pick)] = false;
    selected[static_cast<std::size_t>(pick)] = true;
    used += prob.kb_size(pick);
    eta_i += prob.pop_i(pick);
    eta_j += prob.pop_j(pick);
    while (!prob.fits_both(used)) {
      int largest = -1;
      for (int n = 0; n < n_kbs; ++n)
        if (selected[static_cast<std::size_t>(n)] &&
            (largest < 0 || prob.kb_size(n) > prob.kb_size(largest)))
          largest = n;
      if (largest < 0)
        throw InfeasiblePair("capacity violated with nothing selected");
      selected[static_cast<std::size_t>(largest)] = false;
      used -= prob.kb_size(largest);
      eta_i -= prob.pop_i(largest);
      eta_j -= prob.pop_j(largest);
    }
  }

  KbMask mi = 0;
  for (int n = 0; n < n_kbs; ++n)
    if (selected[static_cast<std::size_t>(n)]) mi |= kb_bit(n);
  return PairProblem::make_pair_mask(mi, mi, n_kbs);
}

inline KbMask initial_feasible_kbc(const KbLibrary& library,
                                   const VueProfile& vue_i,
                                   const VueProfile& vue_j, double eta0) {
  return initial_feasible_kbc(PairProblem(library, vue_i, vue_j, eta0, 0, 0));
}

// Bounded FIFO memory of visited solutions.
class TabuList {
 public:
  explicit TabuList(int capacity)
      : buf_(static_cast<std::size_t>(capacity), 0), cap_(capacity) {}

  bool contains(KbMask m) const {
    for (int k = 0; k < size_; ++k)
      if (buf_[static_cast<std::size_t>(k)] == m) return true;
    return false;
  }

  void push(KbMask m) {
    if (size_ < cap_) {
      buf_[static_cast<std::size_t>(size_++)] = m;
    } else {
      buf_[static_cast<std::size_t>(head_)] = m;
      head_ = (head_ + 1) % cap_;
    }
  }

  int size() const { return size_; }

 private:
  std::vector<KbMask> buf_;
  int cap_;
  int size_ = 0;
  int head_ = 0;
};

namespace detail {

// Visits every flip subset of size <= sigma around `pair` (including the
// empty subset) with delta-updated state; fn(pair_mask, state) is called
// once per candidate.
template <typename Fn>
void for_each_neighbor(const PairProblem& prob, KbMask pair,
                       const PairProblem::State& st, int sigma, int first_bit,
                       Fn&& fn) {
  fn(pair, st);
  if (sigma == 0) return;
  const int nbits = prob.bits();
  for (int b = first_bit; b < nbits; ++b) {
    PairProblem::State child = st;
    KbMask child_pair = pair;
    prob.apply_flip(child, child_pair, b);
    for_each_neighbor(prob, child_pair, child, sigma - 1, b + 1, fn);
  }
}

}  // namespace detail

// Neighborhood of a current solution: all candidates within sigma flips that
// are feasible and not tabu. Materialized form, used by tests and small
// instances; the search itself streams candidates without collecting them.
inline std::vector<KbMask> neighborhood(const PairProblem& prob, KbMask current,
                                        int sigma, const TabuList& tabu) {
  std::vector<KbMask> result;
  detail::for_each_neighbor(
      prob, current, prob.build_state(current), sigma, 0,
      [&](KbMask cand, const PairProblem::State& st) {
        if (!prob.finalize(st).feasible) return;
        if (tabu.contains(cand)) return;
        result.push_back(cand);
      });
  std::sort(result.begin(), result.end());
  return result;
}

struct TabuOutcome {
  KbMask pair_mask = 0;
  PairProblem::Eval eval;
};

// Tabu search over joint constructions of one vehicle pair. The incumbent
// only improves; a move that does not improve it is pushed onto the tabu
// list, an improving move is not (the aspiration rule).
inline TabuOutcome tabu_search_p1(const PairProblem& prob,
                                  const SolverConfig& config) {
  const KbMask init = initial_feasible_kbc(prob);
  KbMask cur = init;
  KbMask best = init;
  PairProblem::Eval best_eval = prob.evaluate(init);
  bool have_best = best_eval.feasible;
  TabuList tabu(config.tabu_capacity);

  for (int it = 0; it < config.tabu_iterations; ++it) {
    KbMask cand = 0;
    double cand_omega = kInf;
    bool found = false;
    detail::for_each_neighbor(
        prob, cur, prob.build_state(cur), config.sigma, 0,
        [&](KbMask m, const PairProblem::State& st) {
          const PairProblem::Eval e = prob.finalize(st);
          if (!e.feasible || e.omega >= cand_omega) return;
          if (tabu.contains(m)) return;
          cand = m;
          cand_omega = e.omega;
          found = true;
        });
    if (!found) break;  // neighborhood exhausted, keep the incumbent
    cur = cand;
    if (!have_best || cand_omega < best_eval.omega) {
      best = cur;
      best_eval = prob.evaluate(cur);
      have_best = true;
    } else {
      tabu.push(cur);
    }
  }

  if (!have_best)
    throw InfeasiblePair("tabu search found no feasible joint construction");
  return {best, prob.evaluate(best)};
}

// Full enumeration of the 2N-bit space; first strict minimum wins, so ties
// resolve to the lexicographically smallest pair mask.
inline TabuOutcome exhaustive_search_p1(const PairProblem& prob) {
  if (prob.bits() > 16)
    throw ValidationError("exhaustive P1 mode supports at most 8 KBs");
  TabuOutcome out;
  bool found = false;
  const KbMask end = 1ULL << prob.bits();
  for (KbMask m = 0; m < end; ++m) {
    const PairProblem::Eval e = prob.evaluate(m);
    if (!e.feasible) continue;
    if (!found || e.omega < out.eval.omega) {
      out.pair_mask = m;
      out.eval = e;
      found = true;
    }
  }
  if (!found) throw InfeasiblePair("no feasible joint construction exists");
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient matrix: one optimal pair cost per unordered neighbor pair,
// +inf on the diagonal, for non-neighbors and for infeasible pairs.
// ---------------------------------------------------------------------------
struct OmegaEntry {
  double omega = kInf;
  KbMask alpha_i = 0;  // stored sub-policy of the lower-indexed vehicle
  KbMask alpha_j = 0;
  bool feasible = false;
};

struct OmegaMatrix {
  int num_vues = 0;
  int n_kbs = 0;
  std::vector<OmegaEntry> entries;  // row-major upper triangle, i < j
  std::size_t subproblem_count = 0;

  static std::size_t upper_index(int i, int j, int v) {
    // i < j; offset of row i is i*v - i*(i+1)/2.
    const auto ii = static_cast<std::size_t>(i);
    const auto vv = static_cast<std::size_t>(v);
    return ii * vv - ii * (ii + 1) / 2 + static_cast<std::size_t>(j - i - 1);
  }

  const OmegaEntry& entry(int i, int j) const {
    if (i > j) std::swap(i, j);
    return entries[upper_index(i, j, num_vues)];
  }
  OmegaEntry& entry(int i, int j) {
    if (i > j) std::swap(i, j);
    return entries[upper_index(i, j, num_vues)];
  }
  double omega(int i, int j) const {
    return i == j ? kInf : entry(i, j).omega;
  }
};

inline OmegaMatrix build_omega_matrix(const Instance& instance,
                                      const std::vector<double>& tau,
                                      const SolverConfig& config) {
  const int v = instance.num_vues();
  OmegaMatrix mat;
  mat.num_vues = v;
  mat.n_kbs = instance.n_kbs();
  mat.entries.assign(static_cast<std::size_t>(v) * (v - 1) / 2, {});

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < v; ++i)
    for (int j : instance.graph.neighbors[static_cast<std::size_t>(i)])
      if (j > i) pairs.emplace_back(i, j);
  mat.subproblem_count = pairs.size();

  parallel_for(pairs.size(), config.threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const PairProblem prob(instance.library,
                           instance.profiles[static_cast<std::size_t>(i)],
                           instance.profiles[static_cast<std::size_t>(j)],
                           instance.eta0, tau[static_cast<std::size_t>(i)],
                           tau[static_cast<std::size_t>(j)]);
    OmegaEntry& e = mat.entry(i, j);
    try {
      const TabuOutcome out = config.exhaustive_p1
                                  ? exhaustive_search_p1(prob)
                                  : tabu_search_p1(prob, config);
      e.omega = out.eval.omega;
      e.alpha_i = PairProblem::mask_i(out.pair_mask, prob.n_kbs());
      e.alpha_j = PairProblem::mask_j(out.pair_mask, prob.n_kbs());
      e.feasible = true;
    } catch (const InfeasiblePair&) {
      // entry stays +inf
    }
  });
  return mat;
}

// ---------------------------------------------------------------------------
// Pairing subproblem.
// ---------------------------------------------------------------------------
struct VspMatching {
  std::vector<int> partner;  // -1 for unmatched

  int num_vues() const { return static_cast<int>(partner.size()); }
  int matched_count() const {
    int c = 0;
    for (int p : partner)
      if (p >= 0) ++c;
    return c;
  }
  bool complete() const { return matched_count() == num_vues(); }
};

struct P2Solution {
  std::vector<std::pair<int, int>> edges;  // i < j, finite pair costs only
  std::vector<double> beta;                // relaxed beta per edge
  double lp_objective = 0.0;
};

namespace detail {

inline std::vector<std::pair<int, int>> finite_edges(const OmegaMatrix& mat) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < mat.num_vues; ++i)
    for (int j = i + 1; j < mat.num_vues; ++j)
      if (std::isfinite(mat.entry(i, j).omega)) edges.emplace_back(i, j);
  return edges;
}

// Every connected component of the finite-cost graph must have even order,
// otherwise the single-association constraint is unsatisfiable.
inline void check_component_parity(const std::vector<std::pair<int, int>>& edges,
                                   int v) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(v));
  for (const auto& [i, j] : edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<char> seen(static_cast<std::size_t>(v), 0);
  for (int s = 0; s < v; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    int size = 0;
    std::vector<int> stack{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      ++size;
      for (int w : adj[static_cast<std::size_t>(u)])
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
    }
    if (size % 2 != 0)
      throw InfeasiblePairing("component of " + std::to_string(size) +
                              " vehicles cannot be perfectly paired");
  }
}

}  // namespace detail

// Relaxed pairing: minimize sum of pair costs subject to one unit of
// association mass per vehicle, beta in [0,1] (the upper bound is implied).
inline P2Solution solve_p2_lp(const OmegaMatrix& mat) {
  const int v = mat.num_vues;
  P2Solution sol;
  sol.edges = detail::finite_edges(mat);
  detail::check_component_parity(sol.edges, v);

  const std::size_t m = static_cast<std::size_t>(v);
  const std::size_t n = sol.edges.size();
  std::vector<double> a(m * n, 0.0), b(m, 1.0), c(n);
  for (std::size_t e = 0; e < n; ++e) {
    a[static_cast<std::size_t>(sol.edges[e].first) * n + e] = 1.0;
    a[static_cast<std::size_t>(sol.edges[e].second) * n + e] = 1.0;
    c[e] = mat.entry(sol.edges[e].first, sol.edges[e].second).omega;
  }
  const lp::LpResult res = lp::solve_equality_form(m, n, a, b, c);
  if (res.status == lp::LpStatus::Infeasible)
    throw InfeasiblePairing("pairing LP infeasible: no fractional matching");
  if (res.status != lp::LpStatus::Optimal)
    throw Error("pairing LP did not converge");
  sol.beta = res.x;
  sol.lp_objective = res.objective;
  return sol;
}

// Rounds a relaxed pairing: repeatedly fix the edge with the largest beta
// among still-unpaired vehicles (lexicographic on ties), equivalent to one
// greedy pass over edges sorted by descending beta.
inline VspMatching round_matching(const P2Solution& sol, int num_vues) {
  VspMatching match;
  match.partner.assign(static_cast<std::size_t>(num_vues), -1);
  std::vector<std::size_t> order(sol.edges.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sol.beta[a] != sol.beta[b]) return sol.beta[a] > sol.beta[b];
    return sol.edges[a] < sol.edges[b];
  });
  for (std::size_t k : order) {
    const auto [i, j] = sol.edges[k];
    if (match.partner[static_cast<std::size_t>(i)] < 0 &&
        match.partner[static_cast<std::size_t>(j)] < 0) {
      match.partner[static_cast<std::size_t>(i)] = j;
      match.partner[static_cast<std::size_t>(j)] = i;
    }
  }
  return match;
}

// Greedy pairing backend: smallest finite pair cost first.
inline VspMatching greedy_matching_from_omega(const OmegaMatrix& mat) {
  VspMatching match;
  match.partner.assign(static_cast<std::size_t>(mat.num_vues), -1);
  auto edges = detail::finite_edges(mat);
  std::sort(edges.begin(), edges.end(),
            [&](const std::pair<int, int>& a, const std::pair<int, int>& b) {
              const double wa = mat.entry(a.first, a.second).omega;
              const double wb = mat.entry(b.first, b.second).omega;
              if (wa != wb) return wa < wb;
              return a < b;
            });
  for (const auto& [i, j] : edges)
    if (match.partner[static_cast<std::size_t>(i)] < 0 &&
        match.partner[static_cast<std::size_t>(j)] < 0) {
      match.partner[static_cast<std::size_t>(i)] = j;
      match.partner[static_cast<std::size_t>(j)] = i;
    }
  return match;
}

// ---------------------------------------------------------------------------
// Lagrangian bookkeeping and feasibility.
// ---------------------------------------------------------------------------
struct ConstraintReport {
  bool storage_ok = true;       // (9a)
  bool eta_ok = true;           // (9b)
  bool matching_complete = true;  // (9c) with (9d) by construction
  bool matching_valid = true;     // involution over neighbor links
  bool mismatch_ok = true;      // (9e)
  bool stable_ok = true;        // finite queueing delay on matched links
  double max_theta = 0.0;
  double min_eta = 1.0;
  int unmatched = 0;

  bool feasible() const {
    return storage_ok && eta_ok && matching_complete && matching_valid &&
           mismatch_ok && stable_ok;
  }
};

constexpr double kThetaTol = 1e-12;

inline ConstraintReport check_feasibility(const Instance& instance,
                                          const KbcPolicy& kbc,
                                          const VspMatching& matching) {
  ConstraintReport rep;
  const int v = instance.num_vues();
  for (int i = 0; i < v; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const VueProfile& prof = instance.profiles[ui];
    if (capacity_used(kbc.rows[ui], instance.library) > prof.capacity)
      rep.storage_ok = false;
    const double eta = preference_satisfaction(kbc.rows[ui], prof);
    rep.min_eta = std::min(rep.min_eta, eta);
    if (eta < instance.eta0 - kEtaTol) rep.eta_ok = false;

    const int j = matching.partner[ui];
    if (j < 0) {
      ++rep.unmatched;
      rep.matching_complete = false;
      continue;
    }
    if (j == i || matching.partner[static_cast<std::size_t>(j)] != i ||
        !instance.graph.adjacent(i, j))
      rep.matching_valid = false;
    const PairDirectionEval ev = evaluate_direction(
        kbc.rows[ui], kbc.rows[static_cast<std::size_t>(j)], prof,
        instance.profiles[static_cast<std::size_t>(j)]);
    if (!ev.stable) rep.stable_ok = false;
    rep.max_theta = std::max(rep.max_theta, ev.theta);
    if (ev.theta > instance.theta0 + kThetaTol) rep.mismatch_ok = false;
  }
  return rep;
}

// Primal objective: total queuing delay over all association directions.
inline double primal_objective(const Instance& instance, const KbcPolicy& kbc,
                               const VspMatching& matching) {
  double total = 0.0;
  for (int i = 0; i < instance.num_vues(); ++i) {
    const int j = matching.partner[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    const PairDirectionEval ev = evaluate_direction(
        kbc.rows[static_cast<std::size_t>(i)],
        kbc.rows[static_cast<std::size_t>(j)],
        instance.profiles[static_cast<std::size_t>(i)],
        instance.profiles[static_cast<std::size_t>(j)]);
    if (!ev.stable) return kInf;
    total += ev.delay;
  }
  return total;
}

// L~ = sum over association directions of (delta + tau_i * theta).
inline double lagrangian(const Instance& instance, const KbcPolicy& kbc,
                         const VspMatching& matching,
                         const std::vector<double>& tau) {
  double total = 0.0;
  for (int i = 0; i < instance.num_vues(); ++i) {
    const int j = matching.partner[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    const PairDirectionEval ev = evaluate_direction(
        kbc.rows[static_cast<std::size_t>(i)],
        kbc.rows[static_cast<std::size_t>(j)],
        instance.profiles[static_cast<std::size_t>(i)],
        instance.profiles[static_cast<std::size_t>(j)]);
    if (!ev.stable) return kInf;
    total += ev.delay + tau[static_cast<std::size_t>(i)] * ev.theta;
  }
  return total;
}

inline double dual_value(double lagrangian_min, const std::vector<double>& tau,
                         double theta0) {
  double tau_sum = 0.0;
  for (double t : tau) tau_sum += t;
  return lagrangian_min - theta0 * tau_sum;
}

// Projected subgradient step on the mismatch multipliers.
inline std::vector<double> dual_update(const std::vector<double>& tau,
                                       const std::vector<double>& achieved,
                                       double theta0, double stepsize) {
  std::vector<double> next(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i)
    next[i] = std::max(0.0, tau[i] - stepsize * (theta0 - achieved[i]));
  return next;
}

// ---------------------------------------------------------------------------
// The full dual loop.
// ---------------------------------------------------------------------------
struct IterationDiag {
  int t = 0;
  double dual_value = 0.0;
  double incumbent_objective = kInf;
  double max_theta_slack = 0.0;  // max_i (achieved_i - theta0)
};

struct SolverResult {
  KbcPolicy kbc;
  VspMatching matching;
  double objective = kInf;
  bool feasible = false;
  bool used_last_iterate = false;
  ConstraintReport report;
  std::vector<double> tau;  // multipliers after the final update
  std::vector<IterationDiag> trace;
  std::size_t subproblem_count = 0;
  int iterations = 0;
  double runtime_s = 0.0;
};

namespace detail {

// Construction for vehicles the pairing left out: most-preferred KBs that
// fit, stopping once the satisfaction threshold is met. Deterministic.
inline KbMask fallback_kbc(const VueProfile& profile, const KbLibrary& library,
                           double eta0) {
  std::vector<int> by_pref(static_cast<std::size_t>(library.count()));
  for (int n = 0; n < library.count(); ++n) by_pref[static_cast<std::size_t>(n)] = n;
  std::sort(by_pref.begin(), by_pref.end(), [&](int a, int b) {
    return profile.pref.ranks[static_cast<std::size_t>(a)] <
           profile.pref.ranks[static_cast<std::size_t>(b)];
  });
  KbMask mask = 0;
  int used = 0;
  double eta = 0.0;
  for (int n : by_pref) {
    if (eta >= eta0 - kEtaTol) break;
    const int s = library.sizes[static_cast<std::size_t>(n)];
    if (used + s > profile.capacity) continue;
    mask |= kb_bit(n);
    used += s;
    eta += profile.pref.popularity[static_cast<std::size_t>(n)];
  }
  return mask;
}

}  // namespace detail

// The two-stage inner solve for one multiplier vector: pair subproblems,
// coefficient matrix, relaxed pairing plus rounding, sub-policy readback.
struct TwoStageSolution {
  OmegaMatrix omega;
  VspMatching matching;
  KbcPolicy kbc;
  double attained_lagrangian = 0.0;  // sum of matched pair costs
};

inline TwoStageSolution solve_two_stage(const Instance& instance,
                                        const std::vector<double>& tau,
                                        const SolverConfig& config) {
  TwoStageSolution out;
  out.omega = build_omega_matrix(instance, tau, config);
  if (config.p2_backend == SolverConfig::P2Backend::Greedy) {
    out.matching = greedy_matching_from_omega(out.omega);
  } else {
    const P2Solution relaxed = solve_p2_lp(out.omega);
    out.matching = round_matching(relaxed, instance.num_vues());
  }

  out.kbc.n_kbs = instance.n_kbs();
  out.kbc.rows.assign(static_cast<std::size_t>(instance.num_vues()), 0);
  for (int i = 0; i < instance.num_vues(); ++i) {
    const int j = out.matching.partner[static_cast<std::size_t>(i)];
    if (j < 0) {
      out.kbc.rows[static_cast<std::size_t>(i)] = detail::fallback_kbc(
          instance.profiles[static_cast<std::size_t>(i)], instance.library,
          instance.eta0);
      continue;
    }
    const OmegaEntry& e = out.omega.entry(i, j);
    out.kbc.rows[static_cast<std::size_t>(i)] = i < j ? e.alpha_i : e.alpha_j;
    if (i < j) out.attained_lagrangian += e.omega;
  }
  return out;
}

inline SolverResult run_s4(const Instance& instance,
                           const SolverConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int v = instance.num_vues();
  std::vector<double> tau(static_cast<std::size_t>(v), config.tau0);

  SolverResult result;
  struct Iterate {
    KbcPolicy kbc;
    VspMatching matching;
    double objective = kInf;
    ConstraintReport report;
  };
  Iterate incumbent, last;
  bool have_incumbent = false;

  for (int t = 0; t < config.dual_iterations; ++t) {
    const TwoStageSolution stage = solve_two_stage(instance, tau, config);
    result.subproblem_count = stage.omega.subproblem_count;

    last.kbc = stage.kbc;
    last.matching = stage.matching;
    last.report = check_feasibility(instance, stage.kbc, stage.matching);
    last.objective = primal_objective(instance, stage.kbc, stage.matching);

    if (last.report.feasible() &&
        (!have_incumbent || last.objective < incumbent.objective)) {
      incumbent = last;
      have_incumbent = true;
    }

    IterationDiag diag;
    diag.t = t;
    diag.dual_value =
        dual_value(stage.attained_lagrangian, tau, instance.theta0);
    diag.incumbent_objective = have_incumbent ? incumbent.objective : kInf;

    std::vector<double> achieved(static_cast<std::size_t>(v), 0.0);
    double max_slack = -kInf;
    for (int i = 0; i < v; ++i) {
      const int j = stage.matching.partner[static_cast<std::size_t>(i)];
      if (j >= 0) {
        const PairDirectionEval ev = evaluate_direction(
            stage.kbc.rows[static_cast<std::size_t>(i)],
            stage.kbc.rows[static_cast<std::size_t>(j)],
            instance.profiles[static_cast<std::size_t>(i)],
            instance.profiles[static_cast<std::size_t>(j)]);
        achieved[static_cast<std::size_t>(i)] = ev.theta;
      }
      max_slack =
          std::max(max_slack, achieved[static_cast<std::size_t>(i)] -
                                  instance.theta0);
    }
    diag.max_theta_slack = max_slack;
    result.trace.push_back(diag);

    tau = dual_update(tau, achieved, instance.theta0, config.stepsize(t));
    result.iterations = t + 1;
  }

  const bool take_incumbent =
      config.recovery == SolverConfig::Recovery::BestFeasible && have_incumbent;
  const Iterate& chosen = take_incumbent ? incumbent : last;
  result.kbc = chosen.kbc;
  result.matching = chosen.matching;
  result.objective = chosen.objective;
  result.report = chosen.report;
  result.feasible = chosen.report.feasible();
  result.used_last_iterate = !take_incumbent;

  result.tau = tau;
  result.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle over tiny instances: every construction matrix times
// every perfect pairing, fully independent of the two-stage path.
// ---------------------------------------------------------------------------
struct OracleResult {
  bool found = false;  // a feasible point exists
  double objective = kInf;
  KbcPolicy kbc;
  VspMatching matching;
};

namespace detail {

inline void enumerate_perfect_matchings(const NeighborGraph& graph,
                                        std::vector<int>& partner,
                                        std::vector<VspMatching>& out) {
  int i = 0;
  while (i < graph.num_vues && partner[static_cast<std::size_t>(i)] >= 0) ++i;
  if (i == graph.num_vues) {
    VspMatching m;
    m.partner = partner;
    out.push_back(std::move(m));
    return;
  }
  for (int j : graph.neighbors[static_cast<std::size_t>(i)]) {
    if (j <= i || partner[static_cast<std::size_t>(j)] >= 0) continue;
    partner[static_cast<std::size_t>(i)] = j;
    partner[static_cast<std::size_t>(j)] = i;
    enumerate_perfect_matchings(graph, partner, out);
    partner[static_cast<std::size_t>(i)] = -1;
    partner[static_cast<std::size_t>(j)] = -1;
  }
}

inline void oracle_guard(const Instance& instance) {
  if (instance.num_vues() > 4 || instance.n_kbs() > 4)
    throw OracleTooLarge("exhaustive oracle supports V <= 4, N <= 4");
}

}  // namespace detail

inline std::vector<VspMatching> all_perfect_matchings(
    const NeighborGraph& graph) {
  std::vector<int> partner(static_cast<std::size_t>(graph.num_vues), -1);
  std::vector<VspMatching> out;
  detail::enumerate_perfect_matchings(graph, partner, out);
  return out;
}

// Global optimum of the primal problem: minimizes total delay subject to
// storage, satisfaction, single association, mismatch threshold and queue
// stability. `found == false` reports that no feasible point exists.
inline OracleResult exhaustive_oracle_p0(const Instance& instance) {
  detail::oracle_guard(instance);
  const int v = instance.num_vues();
  const int n_kbs = instance.n_kbs();
  const auto matchings = all_perfect_matchings(instance.graph);

  OracleResult best;
  KbcPolicy kbc;
  kbc.n_kbs = n_kbs;
  kbc.rows.assign(static_cast<std::size_t>(v), 0);

  const std::uint64_t alpha_end = 1ULL << (v * n_kbs);
  for (const VspMatching& match : matchings) {
    for (std::uint64_t code = 0; code < alpha_end; ++code) {
      for (int i = 0; i < v; ++i)
        kbc.rows[static_cast<std::size_t>(i)] =
            (code >> (i * n_kbs)) & kb_full(n_kbs);

      bool ok = true;
      double objective = 0.0;
      for (int i = 0; i < v && ok; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const VueProfile& prof = instance.profiles[ui];
        if (capacity_used(kbc.rows[ui], instance.library) > prof.capacity ||
            preference_satisfaction(kbc.rows[ui], prof) <
                instance.eta0 - kEtaTol) {
          ok = false;
          break;
        }
        const int j = match.partner[ui];
        const PairDirectionEval ev = evaluate_direction(
            kbc.rows[ui], kbc.rows[static_cast<std::size_t>(j)], prof,
            instance.profiles[static_cast<std::size_t>(j)]);
        if (!ev.stable || ev.theta > instance.theta0 + kThetaTol) {
          ok = false;
          break;
        }
        objective += ev.delay;
      }
      if (ok && (!best.found || objective < best.objective)) {
        best.found = true;
        best.objective = objective;
        best.kbc = kbc;
        best.matching = match;
      }
    }
  }
  return best;
}

// Global optimum of the inner problem for a fixed multiplier vector: the
// same enumeration minimizing the Lagrangian term without the mismatch
// constraint.
inline OracleResult exhaustive_inner_optimum(const Instance& instance,
                                             const std::vector<double>& tau) {
  detail::oracle_guard(instance);
  const int v = instance.num_vues();
  const int n_kbs = instance.n_kbs();
  const auto matchings = all_perfect_matchings(instance.graph);

  OracleResult best;
  KbcPolicy kbc;
  kbc.n_kbs = n_kbs;
  kbc.rows.assign(static_cast<std::size_t>(v), 0);

  const std::uint64_t alpha_end = 1ULL << (v * n_kbs);
  for (const VspMatching& match : matchings) {
    bool match_found = false;
    double match_value = kInf;
    KbcPolicy match_kbc;
    for (std::uint64_t code = 0; code < alpha_end; ++code) {
      for (int i = 0; i < v; ++i)
        kbc.rows[static_cast<std::size_t>(i)] =
            (code >> (i * n_kbs)) & kb_full(n_kbs);

      bool ok = true;
      double value = 0.0;
      for (int i = 0; i < v && ok; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const VueProfile& prof = instance.profiles[ui];
        if (capacity_used(kbc.rows[ui], instance.library) > prof.capacity ||
            preference_satisfaction(kbc.rows[ui], prof) <
                instance.eta0 - kEtaTol) {
          ok = false;
          break;
        }
        const int j = match.partner[ui];
        const PairDirectionEval ev = evaluate_direction(
            kbc.rows[ui], kbc.rows[static_cast<std::size_t>(j)], prof,
            instance.profiles[static_cast<std::size_t>(j)]);
        if (!ev.stable) {
          ok = false;
          break;
        }
        value += ev.delay + tau[ui] * ev.theta;
      }
      if (ok && value < match_value) {
        match_found = true;
        match_value = value;
        match_kbc = kbc;
      }
    }
    if (match_found && (!best.found || match_value < best.objective)) {
      best.found = true;
      best.objective = match_value;
      best.kbc = match_kbc;
      best.matching = match;
    }
  }
  return best;
}

}  // namespace scvn

#endif  // SCVN_SOLVER_HPP
