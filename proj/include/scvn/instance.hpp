#ifndef SCVN_INSTANCE_HPP
#define SCVN_INSTANCE_HPP

#include <vector>

#include "scvn/knowledge.hpp"
#include "scvn/scenario.hpp"

namespace scvn {

// One solvable snapshot: topology plus knowledge state plus thresholds.
// Vehicle indices run 0..V-1 and are shared by profiles, placements and the
// neighbor graph.
struct Instance {
  KbLibrary library;
  std::vector<VueProfile> profiles;
  std::vector<VuePlacement> placements;
  NeighborGraph graph;
  double eta0 = 0.5;
  double theta0 = 0.1;

  int num_vues() const { return static_cast<int>(profiles.size()); }
  int n_kbs() const { return library.count(); }
};

}  // namespace scvn

#endif  // SCVN_INSTANCE_HPP
