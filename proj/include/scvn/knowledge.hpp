#ifndef SCVN_KNOWLEDGE_HPP
#define SCVN_KNOWLEDGE_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scvn/errors.hpp"
#include "scvn/rng.hpp"

namespace scvn {

// A construction policy row: bit n set means KB n is stored. Capped at 32
// KBs so a pair policy (2N bits) still fits one word for the solver.
using KbMask = std::uint64_t;
constexpr int kMaxKbs = 32;

inline bool kb_in(KbMask mask, int n) { return (mask >> n) & 1ULL; }
inline KbMask kb_bit(int n) { return 1ULL << n; }
inline int kb_count(KbMask mask) { return __builtin_popcountll(mask); }
inline KbMask kb_full(int n_kbs) {
  return n_kbs >= 64 ? ~0ULL : (1ULL << n_kbs) - 1ULL;
}

struct KbLibrary {
  std::vector<int> sizes;  // storage units per KB, positive

  int count() const { return static_cast<int>(sizes.size()); }

  void validate() const {
    if (sizes.empty()) throw ValidationError("KB library must not be empty");
    for (int s : sizes)
      if (s < 1) throw ValidationError("KB sizes must be positive integers");
  }
};

inline KbLibrary make_library(int n_kbs, int size_min, int size_max, Rng& rng) {
  if (n_kbs < 1) throw ValidationError("n_kbs must be >= 1");
  if (size_min < 1 || size_max < size_min)
    throw ValidationError("invalid KB size range");
  KbLibrary lib;
  lib.sizes.reserve(static_cast<std::size_t>(n_kbs));
  for (int n = 0; n < n_kbs; ++n)
    lib.sizes.push_back(uniform_int(rng, size_min, size_max));
  return lib;
}

// Zipf popularity of the KB at a given preference rank (1 = most preferred).
inline double zipf_popularity(int rank, double skew, int n_kbs) {
  if (n_kbs < 1) throw ValidationError("n_kbs must be >= 1");
  if (skew < 0.0) throw ValidationError("zipf skew must be >= 0");
  if (rank < 1 || rank > n_kbs)
    throw InvalidRank("rank " + std::to_string(rank) + " outside 1.." +
                      std::to_string(n_kbs));
  double denom = 0.0;
  for (int e = 1; e <= n_kbs; ++e) denom += std::pow(e, -skew);
  return std::pow(rank, -skew) / denom;
}

struct PreferenceProfile {
  std::vector<int> ranks;        // ranks[n] in 1..N, a permutation
  double skew = 1.0;
  std::vector<double> popularity;  // popularity[n] = zipf(ranks[n])
};

inline PreferenceProfile make_preference_profile(int n_kbs, double skew,
                                                 Rng& rng) {
  PreferenceProfile pref;
  pref.skew = skew;
  std::vector<int> perm = permutation(n_kbs, rng);
  pref.ranks.resize(static_cast<std::size_t>(n_kbs));
  for (int n = 0; n < n_kbs; ++n) pref.ranks[static_cast<std::size_t>(n)] = perm[static_cast<std::size_t>(n)] + 1;
  pref.popularity.resize(static_cast<std::size_t>(n_kbs));
  double denom = 0.0;
  for (int e = 1; e <= n_kbs; ++e) denom += std::pow(e, -skew);
  for (int n = 0; n < n_kbs; ++n)
    pref.popularity[static_cast<std::size_t>(n)] =
        std::pow(pref.ranks[static_cast<std::size_t>(n)], -skew) / denom;
  return pref;
}

struct VueProfile {
  int id = 0;
  int capacity = 24;                 // storage units
  double arrival_rate = 100.0;       // total semantic packets/s
  std::vector<double> interp_rate;   // per-KB interpretation rate mu [1/s]
  PreferenceProfile pref;

  int n_kbs() const { return static_cast<int>(interp_rate.size()); }

  void validate() const {
    if (capacity <= 0) throw ValidationError("capacity must be > 0");
    if (!(arrival_rate > 0.0))
      throw ValidationError("arrival_rate must be > 0");
    for (double mu : interp_rate)
      if (!(mu > 0.0)) throw ValidationError("interpretation rates must be > 0");
  }
};

struct KbcPolicy {
  int n_kbs = 0;
  std::vector<KbMask> rows;  // one mask per vehicle
};

// lambda_i^n = lambda_i * p_i^n
inline double arrival_rate_per_kb(const VueProfile& profile, int kb) {
  return profile.arrival_rate * profile.pref.popularity[static_cast<std::size_t>(kb)];
}

// eta_i: preference mass covered by the constructed set.
inline double preference_satisfaction(KbMask constructed,
                                      const VueProfile& profile) {
  double eta = 0.0;
  const int n_kbs = profile.n_kbs();
  for (int n = 0; n < n_kbs; ++n)
    if (kb_in(constructed, n)) eta += profile.pref.popularity[static_cast<std::size_t>(n)];
  return eta;
}

inline int capacity_used(KbMask constructed, const KbLibrary& library) {
  int used = 0;
  for (int n = 0; n < library.count(); ++n)
    if (kb_in(constructed, n)) used += library.sizes[static_cast<std::size_t>(n)];
  return used;
}

inline bool feasible_storage(KbMask constructed, const KbLibrary& library,
                             int capacity) {
  return capacity_used(constructed, library) <= capacity;
}

// Comparison tolerance for satisfaction thresholds; popularity sums carry
// rounding noise of a few ulps.
constexpr double kEtaTol = 1e-12;

// Benchmark construction: most-preferred KBs (that fit) until eta_0 is met,
// then a uniformly random fill of the remaining capacity. Ties in
// preference break toward the lower KB index.
inline KbMask preference_first_kbc(const VueProfile& profile,
                                   const KbLibrary& library, double eta0,
                                   Rng& rng) {
  const int n_kbs = library.count();
  std::vector<int> by_pref(static_cast<std::size_t>(n_kbs));
  for (int n = 0; n < n_kbs; ++n) by_pref[static_cast<std::size_t>(n)] = n;
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
    if (used + s > profile.capacity) continue;  // too big, try next preferred
    mask |= kb_bit(n);
    used += s;
    eta += profile.pref.popularity[static_cast<std::size_t>(n)];
  }
  if (eta < eta0 - kEtaTol)
    throw InfeasiblePreference("cannot reach eta0 = " + std::to_string(eta0) +
                               " within capacity " +
                               std::to_string(profile.capacity));

  std::vector<int> rest;
  for (int n = 0; n < n_kbs; ++n)
    if (!kb_in(mask, n)) rest.push_back(n);
  shuffle(rest, rng);
  for (int n : rest) {
    const int s = library.sizes[static_cast<std::size_t>(n)];
    if (used + s <= profile.capacity) {
      mask |= kb_bit(n);
      used += s;
    }
  }
  return mask;
}

struct KnowledgeParams {
  int n_kbs = 12;
  int size_min = 1;
  int size_max = 5;
  int capacity = 24;
  double zipf_skew = 1.0;
  double lambda_pps = 100.0;
  double interp_min_s = 5e-3;
  double interp_max_s = 1e-2;
  bool shared_interp = true;  // same per-KB interpretation time for all VUEs
};

// Library plus per-vehicle profiles for one trial.
inline std::pair<KbLibrary, std::vector<VueProfile>> make_knowledge(
    const KnowledgeParams& params, int num_vues, std::uint64_t seed) {
  Rng lib_rng = make_rng(derive_seed(seed, 0x6b626c6962));
  KbLibrary library = make_library(params.n_kbs, params.size_min,
                                   params.size_max, lib_rng);

  std::vector<double> shared_rates(static_cast<std::size_t>(params.n_kbs));
  Rng rate_rng = make_rng(derive_seed(seed, 0x696e7470));
  for (int n = 0; n < params.n_kbs; ++n)
    shared_rates[static_cast<std::size_t>(n)] =
        1.0 / uniform_range(rate_rng, params.interp_min_s, params.interp_max_s);

  std::vector<VueProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(num_vues));
  for (int i = 0; i < num_vues; ++i) {
    VueProfile p;
    p.id = i;
    p.capacity = params.capacity;
    p.arrival_rate = params.lambda_pps;
    Rng vr = make_rng(derive_seed(seed, 0x70726f66, i));
    p.pref = make_preference_profile(params.n_kbs, params.zipf_skew, vr);
    if (params.shared_interp) {
      p.interp_rate = shared_rates;
    } else {
      p.interp_rate.resize(static_cast<std::size_t>(params.n_kbs));
      for (int n = 0; n < params.n_kbs; ++n)
        p.interp_rate[static_cast<std::size_t>(n)] =
            1.0 / uniform_range(vr, params.interp_min_s, params.interp_max_s);
    }
    profiles.push_back(std::move(p));
  }
  return {std::move(library), std::move(profiles)};
}

}  // namespace scvn

#endif  // SCVN_KNOWLEDGE_HPP
