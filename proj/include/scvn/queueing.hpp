#ifndef SCVN_QUEUEING_HPP
#define SCVN_QUEUEING_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scvn/errors.hpp"
#include "scvn/knowledge.hpp"
#include "scvn/rng.hpp"

namespace scvn {

// One direction of a pair: sender i forwards semantic packets to receiver j.
// Only packets whose KB both sides constructed enter the receiver queue.
struct PairDirectionEval {
  int sender = -1;
  int receiver = -1;
  KbMask shared = 0;
  double theta = 0.0;        // knowledge mismatch degree, in [0,1]
  double lambda_eff = 0.0;   // matched-packet arrival rate [1/s]
  double mean_interp = 0.0;  // E[W] [s]
  double var_interp = 0.0;   // Var(W) [s^2]
  double delay = 0.0;        // mean queuing wait [s], 0 for an empty queue
  double utilization = 0.0;  // lambda_eff * E[W]
  bool empty_queue = true;
  bool stable = true;
};

// theta: fraction of the sender's offered packet rate the receiver cannot
// interpret. A sender constructing no KB generates no semantic traffic, so
// theta is 0 by convention there.
inline double mismatch_degree(KbMask alpha_i, KbMask alpha_j,
                              const VueProfile& sender) {
  double offered = 0.0, mismatched = 0.0;
  for (int n = 0; n < sender.n_kbs(); ++n) {
    if (!kb_in(alpha_i, n)) continue;
    const double rate = arrival_rate_per_kb(sender, n);
    offered += rate;
    if (!kb_in(alpha_j, n)) mismatched += rate;
  }
  return offered > 0.0 ? mismatched / offered : 0.0;
}

struct PacketMix {
  std::vector<double> mix;  // per-KB share of queued packets; 0 off-shared
  bool empty = true;        // no shared KB: nothing enters the queue
};

inline PacketMix packet_mix(KbMask alpha_i, KbMask alpha_j,
                            const VueProfile& sender) {
  PacketMix out;
  out.mix.assign(static_cast<std::size_t>(sender.n_kbs()), 0.0);
  const KbMask shared = alpha_i & alpha_j;
  double total = 0.0;
  for (int n = 0; n < sender.n_kbs(); ++n)
    if (kb_in(shared, n)) total += sender.pref.popularity[static_cast<std::size_t>(n)];
  if (total <= 0.0) return out;
  out.empty = false;
  for (int n = 0; n < sender.n_kbs(); ++n)
    if (kb_in(shared, n))
      out.mix[static_cast<std::size_t>(n)] =
          sender.pref.popularity[static_cast<std::size_t>(n)] / total;
  return out;
}

// Every queued packet needs the mix-weighted sum of per-KB interpretation
// times, each exponential with the receiver's rate; hence
// E[W] = sum eps/mu and Var(W) = sum (eps/mu)^2.
inline std::pair<double, double> interp_moments(
    const PacketMix& mix, const std::vector<double>& receiver_rates) {
  double mean = 0.0, var = 0.0;
  for (std::size_t n = 0; n < mix.mix.size(); ++n) {
    const double term = mix.mix[n] / receiver_rates[n];
    mean += term;
    var += term * term;
  }
  return {mean, var};
}

inline PairDirectionEval evaluate_direction(KbMask alpha_i, KbMask alpha_j,
                                            const VueProfile& sender,
                                            const VueProfile& receiver) {
  PairDirectionEval ev;
  ev.sender = sender.id;
  ev.receiver = receiver.id;
  ev.shared = alpha_i & alpha_j;
  ev.theta = mismatch_degree(alpha_i, alpha_j, sender);
  const PacketMix mix = packet_mix(alpha_i, alpha_j, sender);
  ev.empty_queue = mix.empty;
  if (mix.empty) return ev;  // delta = 0: no packets enter the queue

  for (int n = 0; n < sender.n_kbs(); ++n)
    if (kb_in(ev.shared, n)) ev.lambda_eff += arrival_rate_per_kb(sender, n);
  const auto [mean, var] = interp_moments(mix, receiver.interp_rate);
  ev.mean_interp = mean;
  ev.var_interp = var;
  ev.utilization = ev.lambda_eff * mean;
  ev.stable = ev.utilization < 1.0;
  if (ev.stable)
    ev.delay = ev.lambda_eff * (mean * mean + var) /
               (2.0 * (1.0 - ev.utilization));
  return ev;
}

// Pollaczek-Khintchine mean waiting time for the i->j direction.
inline double pk_queuing_latency(KbMask alpha_i, KbMask alpha_j,
                                 const VueProfile& sender,
                                 const VueProfile& receiver) {
  const PairDirectionEval ev =
      evaluate_direction(alpha_i, alpha_j, sender, receiver);
  if (!ev.stable)
    throw UnstableQueue("queue utilization " + std::to_string(ev.utilization) +
                            " >= 1",
                        ev.utilization);
  return ev.delay;
}

// Semantic packet throughput of a pair: interpretation capacity of both
// directions; an empty direction contributes nothing.
inline double pair_tsp(const PairDirectionEval& eval_ij,
                       const PairDirectionEval& eval_ji) {
  double tsp = 0.0;
  if (!eval_ij.empty_queue && eval_ij.mean_interp > 0.0)
    tsp += 1.0 / eval_ij.mean_interp;
  if (!eval_ji.empty_queue && eval_ji.mean_interp > 0.0)
    tsp += 1.0 / eval_ji.mean_interp;
  return tsp;
}

struct DesResult {
  double mean_wait = 0.0;  // time in queue, excluding service [s]
  double ci_half_width = 0.0;
  std::size_t packets = 0;
};

// Discrete-event check of the analytic wait: FIFO single server, Poisson
// arrivals at lambda_eff, per-packet service drawn as the mix-weighted sum
// of fresh exponential interpretation times. Waiting times come from the
// Lindley recursion; the 95% CI uses batch means to absorb autocorrelation.
inline DesResult des_mg1_oracle(KbMask alpha_i, KbMask alpha_j,
                                const VueProfile& sender,
                                const VueProfile& receiver,
                                std::size_t n_packets, std::uint64_t seed) {
  const PairDirectionEval ev =
      evaluate_direction(alpha_i, alpha_j, sender, receiver);
  if (!ev.stable)
    throw UnstableQueue("cannot simulate an unstable queue (utilization " +
                            std::to_string(ev.utilization) + ")",
                        ev.utilization);
  DesResult out;
  if (ev.empty_queue || ev.lambda_eff <= 0.0) return out;

  const PacketMix mix = packet_mix(alpha_i, alpha_j, sender);
  std::vector<int> shared_kbs;
  for (int n = 0; n < sender.n_kbs(); ++n)
    if (kb_in(ev.shared, n)) shared_kbs.push_back(n);

  Rng rng = make_rng(seed);
  auto draw_service = [&] {
    double s = 0.0;
    for (int n : shared_kbs)
      s += mix.mix[static_cast<std::size_t>(n)] *
           exponential(rng, receiver.interp_rate[static_cast<std::size_t>(n)]);
    return s;
  };

  const std::size_t warmup =
      std::min<std::size_t>(10000, n_packets / 10);
  double wait = 0.0;
  double service = draw_service();
  for (std::size_t k = 0; k < warmup; ++k) {
    const double gap = exponential(rng, ev.lambda_eff);
    wait = std::max(0.0, wait + service - gap);
    service = draw_service();
  }

  constexpr std::size_t kBatches = 40;
  const std::size_t per_batch = std::max<std::size_t>(1, n_packets / kBatches);
  std::vector<double> batch_means;
  batch_means.reserve(kBatches);
  std::size_t counted = 0;
  for (std::size_t b = 0; b < kBatches && counted < n_packets; ++b) {
    double sum = 0.0;
    std::size_t m = 0;
    while (m < per_batch && counted < n_packets) {
      const double gap = exponential(rng, ev.lambda_eff);
      wait = std::max(0.0, wait + service - gap);
      sum += wait;
      service = draw_service();
      ++m;
      ++counted;
    }
    batch_means.push_back(sum / static_cast<double>(m));
  }

  double mean = 0.0;
  for (double bm : batch_means) mean += bm;
  mean /= static_cast<double>(batch_means.size());
  double ss = 0.0;
  for (double bm : batch_means) ss += (bm - mean) * (bm - mean);
  const double n_b = static_cast<double>(batch_means.size());
  const double se = n_b > 1 ? std::sqrt(ss / (n_b - 1.0) / n_b) : 0.0;

  out.mean_wait = mean;
  out.ci_half_width = 1.96 * se;
  out.packets = counted;
  return out;
}

}  // namespace scvn

#endif  // SCVN_QUEUEING_HPP
