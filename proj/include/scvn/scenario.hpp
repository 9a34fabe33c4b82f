#ifndef SCVN_SCENARIO_HPP
#define SCVN_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "scvn/errors.hpp"
#include "scvn/rng.hpp"

namespace scvn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Multi-lane freeway crossing a single circular cell, RSU at the center.
struct LaneGeometry {
  int lanes_per_direction = 3;
  double lane_width_m = 4.0;
  double cell_radius_m = 500.0;
  Point2 rsu_position{0.0, 0.0};

  void validate() const {
    if (lanes_per_direction < 1)
      throw ValidationError("lanes_per_direction must be >= 1");
    if (!(lane_width_m > 0.0)) throw ValidationError("lane_width_m must be > 0");
    if (!(cell_radius_m > 0.0))
      throw ValidationError("cell_radius_m must be > 0");
  }

  // Lane center offset from the road axis; forward lanes on positive y.
  double lane_offset(int lane, int direction) const {
    double off = (static_cast<double>(lane) + 0.5) * lane_width_m;
    return direction >= 0 ? off : -off;
  }

  // Half-length of the lane segment lying inside the cell.
  double lane_half_span(int lane, int direction) const {
    const double y = lane_offset(lane, direction);
    const double r = cell_radius_m;
    if (std::abs(y) >= r) return 0.0;
    return std::sqrt(r * r - y * y);
  }
};

enum class InterferenceMode { None, Aggregate };
enum class FadingMode { None, Rayleigh };

struct ChannelParams {
  double tx_power_dbm = 20.0;
  double noise_power_dbm = -114.0;
  double path_loss_intercept_db = 128.1;  // at d = 1 km
  double path_loss_slope_db = 37.6;       // per decade of km
  double shadowing_std_db = 8.0;
  double sinr_threshold_db = 25.0;
  InterferenceMode interference_mode = InterferenceMode::None;
  FadingMode fading = FadingMode::Rayleigh;

  void validate() const {
    if (shadowing_std_db < 0.0)
      throw ValidationError("shadowing_std_db must be >= 0");
    if (!(path_loss_slope_db > 0.0))
      throw ValidationError("path_loss_slope_db must be > 0");
  }
};

struct VuePlacement {
  int vue_id = 0;
  Point2 position;
  int lane = 0;
  int direction = 1;  // +1 forward, -1 backward
};

struct NeighborGraph {
  int num_vues = 0;
  std::vector<std::vector<int>> neighbors;  // sorted ascending
  // Admitted SINR per unordered link, min of the two directions; only
  // meaningful for admitted links. Flat row-major V x V, -inf elsewhere.
  std::vector<double> link_sinr_db;

  double sinr(int i, int j) const {
    return link_sinr_db[static_cast<std::size_t>(i) *
                            static_cast<std::size_t>(num_vues) +
                        static_cast<std::size_t>(j)];
  }
  bool adjacent(int i, int j) const {
    const auto& ni = neighbors[static_cast<std::size_t>(i)];
    return std::binary_search(ni.begin(), ni.end(), j);
  }
  int degree(int i) const {
    return static_cast<int>(neighbors[static_cast<std::size_t>(i)].size());
  }
  bool isolated(int i) const { return degree(i) == 0; }
};

inline double path_loss_db(double distance_m, const ChannelParams& params) {
  if (!(distance_m > 0.0))
    throw InvalidDistance("path loss needs distance > 0, got " +
                          std::to_string(distance_m));
  return params.path_loss_intercept_db +
         params.path_loss_slope_db * std::log10(distance_m / 1000.0);
}

// Channel gain in dB: negative path loss plus log-normal shadowing plus a
// Rayleigh fast-fading power draw (exponential with unit linear mean).
inline double link_gain_db(double distance_m, const ChannelParams& params,
                           std::uint64_t seed) {
  double gain = -path_loss_db(distance_m, params);
  Rng rng = make_rng(seed);
  if (params.shadowing_std_db > 0.0)
    gain += normal(rng, 0.0, params.shadowing_std_db);
  if (params.fading == FadingMode::Rayleigh)
    gain += 10.0 * std::log10(exponential(rng, 1.0));
  return gain;
}

// Spatial Poisson drop: per lane, successive gaps are exponential with mean
// headway * velocity.
inline std::vector<VuePlacement> place_vues(const LaneGeometry& geometry,
                                            double headway_s,
                                            double velocity_kmh,
                                            std::uint64_t seed) {
  geometry.validate();
  if (!(headway_s > 0.0)) throw ValidationError("headway_s must be > 0");
  if (!(velocity_kmh > 0.0)) throw ValidationError("velocity_kmh must be > 0");
  const double mean_gap_m = headway_s * velocity_kmh / 3.6;

  std::vector<VuePlacement> placements;
  int lane_counter = 0;
  for (int direction : {+1, -1}) {
    for (int lane = 0; lane < geometry.lanes_per_direction;
         ++lane, ++lane_counter) {
      const double half = geometry.lane_half_span(lane, direction);
      if (half <= 0.0) continue;
      const double y = geometry.rsu_position.y + geometry.lane_offset(lane, direction);
      Rng rng = make_rng(derive_seed(seed, 0x706c6163, lane_counter));
      double x = -half + exponential(rng, 1.0 / mean_gap_m);
      while (x <= half) {
        VuePlacement p;
        p.vue_id = static_cast<int>(placements.size());
        p.position = {geometry.rsu_position.x + x, y};
        p.lane = lane;
        p.direction = direction;
        placements.push_back(p);
        x += exponential(rng, 1.0 / mean_gap_m);
      }
    }
  }
  if (placements.empty())
    throw EmptyScenario("spatial Poisson drop produced zero vehicles");
  return placements;
}

// Same drop conditioned on the total vehicle count: given the count, a
// Poisson process is uniform per lane with probability proportional to lane
// length, which is what experiments use to pin V exactly.
inline std::vector<VuePlacement> place_vues_count(const LaneGeometry& geometry,
                                                  int count,
                                                  std::uint64_t seed) {
  geometry.validate();
  struct LaneSpan {
    int lane;
    int direction;
    double half;
    double y;
  };
  std::vector<LaneSpan> spans;
  double total_len = 0.0;
  for (int direction : {+1, -1}) {
    for (int lane = 0; lane < geometry.lanes_per_direction; ++lane) {
      const double half = geometry.lane_half_span(lane, direction);
      if (half <= 0.0) continue;
      spans.push_back({lane, direction,
                       half, geometry.rsu_position.y + geometry.lane_offset(lane, direction)});
      total_len += 2.0 * half;
    }
  }
  if (count <= 0 || spans.empty() || total_len <= 0.0)
    throw EmptyScenario("conditioned drop has no room for vehicles");

  Rng rng = make_rng(derive_seed(seed, 0x706c6366));
  std::vector<VuePlacement> placements;
  placements.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    double pick = uniform01(rng) * total_len;
    std::size_t s = 0;
    while (s + 1 < spans.size() && pick >= 2.0 * spans[s].half) {
      pick -= 2.0 * spans[s].half;
      ++s;
    }
    VuePlacement p;
    p.lane = spans[s].lane;
    p.direction = spans[s].direction;
    p.position = {geometry.rsu_position.x +
                      uniform_range(rng, -spans[s].half, spans[s].half),
                  spans[s].y};
    placements.push_back(p);
  }
  std::sort(placements.begin(), placements.end(),
            [](const VuePlacement& a, const VuePlacement& b) {
              if (a.direction != b.direction) return a.direction > b.direction;
              if (a.lane != b.lane) return a.lane < b.lane;
              return a.position.x < b.position.x;
            });
  for (std::size_t i = 0; i < placements.size(); ++i)
    placements[i].vue_id = static_cast<int>(i);
  return placements;
}

// Directed SINR, then symmetric admission on min of the two directions so
// that the pairing constraints see symmetric neighbor sets. Shadowing and
// fading are drawn once per unordered link (reciprocal channel), so with
// interference off both directions coincide.
inline NeighborGraph build_neighbor_graph(
    const std::vector<VuePlacement>& placements, const ChannelParams& params,
    std::uint64_t seed) {
  params.validate();
  const int v = static_cast<int>(placements.size());
  if (v < 2) throw ValidationError("neighbor graph needs >= 2 vehicles");

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> gain_db(static_cast<std::size_t>(v) * v, neg_inf);
  auto at = [v](int i, int j) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(v) +
           static_cast<std::size_t>(j);
  };
  for (int i = 0; i < v; ++i) {
    for (int j = i + 1; j < v; ++j) {
      const double d = distance(placements[i].position, placements[j].position);
      const double g =
          d > 0.0 ? link_gain_db(d, params, derive_seed(seed, 0x6c696e6b, i, j))
                  : 0.0;  // co-located: zero loss
      gain_db[at(i, j)] = g;
      gain_db[at(j, i)] = g;
    }
  }

  auto to_mw = [](double dbm) { return std::pow(10.0, dbm / 10.0); };
  const double noise_mw = to_mw(params.noise_power_dbm);

  NeighborGraph graph;
  graph.num_vues = v;
  graph.neighbors.assign(static_cast<std::size_t>(v), {});
  graph.link_sinr_db.assign(static_cast<std::size_t>(v) * v, neg_inf);

  // rx_mw[i][j]: power received at i from transmitter j.
  std::vector<double> rx_mw(static_cast<std::size_t>(v) * v, 0.0);
  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j)
      if (i != j) rx_mw[at(i, j)] = to_mw(params.tx_power_dbm + gain_db[at(i, j)]);

  std::vector<double> total_rx(static_cast<std::size_t>(v), 0.0);
  if (params.interference_mode == InterferenceMode::Aggregate)
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < v; ++j)
        if (i != j) total_rx[static_cast<std::size_t>(i)] += rx_mw[at(i, j)];

  for (int i = 0; i < v; ++i) {
    for (int j = i + 1; j < v; ++j) {
      // gamma_ij: SINR at receiver i listening to j, and vice versa.
      double denom_i = noise_mw, denom_j = noise_mw;
      if (params.interference_mode == InterferenceMode::Aggregate) {
        denom_i += total_rx[static_cast<std::size_t>(i)] - rx_mw[at(i, j)];
        denom_j += total_rx[static_cast<std::size_t>(j)] - rx_mw[at(j, i)];
      }
      const double sinr_i = 10.0 * std::log10(rx_mw[at(i, j)] / denom_i);
      const double sinr_j = 10.0 * std::log10(rx_mw[at(j, i)] / denom_j);
      const double admitted = std::min(sinr_i, sinr_j);
      if (admitted >= params.sinr_threshold_db) {
        graph.link_sinr_db[at(i, j)] = admitted;
        graph.link_sinr_db[at(j, i)] = admitted;
        graph.neighbors[static_cast<std::size_t>(i)].push_back(j);
        graph.neighbors[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  for (auto& n : graph.neighbors) std::sort(n.begin(), n.end());
  return graph;
}

}  // namespace scvn

#endif  // SCVN_SCENARIO_HPP
