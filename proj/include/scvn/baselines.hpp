#ifndef SCVN_BASELINES_HPP
#define SCVN_BASELINES_HPP

#include <algorithm>
#include <vector>

#include "scvn/instance.hpp"
#include "scvn/queueing.hpp"
#include "scvn/scenario.hpp"
#include "scvn/solver.hpp"

namespace scvn {

// Distance-first pairing: among unpaired neighbor pairs, always take the
// closest one. Globally sorted greedy keeps the outcome order-independent;
// distance ties resolve to the lexicographically smallest pair.
inline VspMatching dfp_matching(const std::vector<VuePlacement>& placements,
                                const NeighborGraph& graph) {
  VspMatching match;
  match.partner.assign(static_cast<std::size_t>(graph.num_vues), -1);
  struct Edge {
    double dist;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < graph.num_vues; ++i)
    for (int j : graph.neighbors[static_cast<std::size_t>(i)])
      if (j > i)
        edges.push_back({distance(placements[static_cast<std::size_t>(i)].position,
                                  placements[static_cast<std::size_t>(j)].position),
                         i, j});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  for (const Edge& e : edges)
    if (match.partner[static_cast<std::size_t>(e.i)] < 0 &&
        match.partner[static_cast<std::size_t>(e.j)] < 0) {
      match.partner[static_cast<std::size_t>(e.i)] = e.j;
      match.partner[static_cast<std::size_t>(e.j)] = e.i;
    }
  return match;
}

// Knowledge-first pairing: highest KB matching degree first, scored as
// (1 - theta_ij) + (1 - theta_ji) under the already-fixed construction.
inline VspMatching kfp_matching(const NeighborGraph& graph,
                                const KbcPolicy& kbc,
                                const std::vector<VueProfile>& profiles) {
  VspMatching match;
  match.partner.assign(static_cast<std::size_t>(graph.num_vues), -1);
  struct Edge {
    double score;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < graph.num_vues; ++i)
    for (int j : graph.neighbors[static_cast<std::size_t>(i)])
      if (j > i) {
        const double theta_ij =
            mismatch_degree(kbc.rows[static_cast<std::size_t>(i)],
                            kbc.rows[static_cast<std::size_t>(j)],
                            profiles[static_cast<std::size_t>(i)]);
        const double theta_ji =
            mismatch_degree(kbc.rows[static_cast<std::size_t>(j)],
                            kbc.rows[static_cast<std::size_t>(i)],
                            profiles[static_cast<std::size_t>(j)]);
        edges.push_back({(1.0 - theta_ij) + (1.0 - theta_ji), i, j});
      }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  for (const Edge& e : edges)
    if (match.partner[static_cast<std::size_t>(e.i)] < 0 &&
        match.partner[static_cast<std::size_t>(e.j)] < 0) {
      match.partner[static_cast<std::size_t>(e.i)] = e.j;
      match.partner[static_cast<std::size_t>(e.j)] = e.i;
    }
  return match;
}

}  // namespace scvn

#endif  // SCVN_BASELINES_HPP
