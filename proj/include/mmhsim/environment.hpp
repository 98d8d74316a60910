// SPDX-License-Identifier: Apache-2.0
//
// Simulated world: base-station deployment (PPP), UE trajectories with
// location indexes, and per-link LoS/NLoS blockage states.

#ifndef MMHSIM_ENVIRONMENT_HPP
#define MMHSIM_ENVIRONMENT_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mmhsim/errors.hpp"
#include "mmhsim/rng.hpp"

namespace mmhsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-aligned rectangle, meters.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;
  double height = 0.0;

  double area() const { return width * height; }
  bool contains(const Vec2& p) const {
    return p.x >= x0 && p.x <= x0 + width && p.y >= y0 && p.y <= y0 + height;
  }
};

struct BaseStation {
  int id = 0;  // unique within its zone, 0-based
  Vec2 position;
  double height = 6.0;  // meters
};

struct Zone {
  Rect extent;
  std::vector<BaseStation> bs_list;
  double density = 0.0;  // BS per m^2

  int num_bs() const { return static_cast<int>(bs_list.size()); }
};

enum class Mobility { pedestrian, vehicular };

struct Trajectory {
  std::vector<Vec2> points;  // location indexes, `spacing` apart by arclength
  double spacing = 2.0;      // meters
  Mobility mobility_class = Mobility::pedestrian;
  double speed_kmh = 5.0;

  int size() const { return static_cast<int>(points.size()); }  // M
};

struct LinkState {
  int bs_id = 0;
  int location_index = 0;
  bool los = true;
  double distance_3d = 0.0;  // meters
};

/// LoS probability of a link at 3D distance d (meters).
/// Collapses to exactly 1 for d <= 27 and decays monotonically beyond.
inline double los_probability(double d) {
  if (d <= 0.0) throw std::domain_error("los_probability: d must be positive");
  const double e = std::exp(-d / 71.0);
  const double inner = std::min(27.0 / d, 1.0) * (1.0 - e) + e;
  return inner * inner;
}

inline double nlos_probability(double d) { return 1.0 - los_probability(d); }

/// Poisson deployment over `extent` with the given density, conditioned on
/// at least one BS (a zero draw is redrawn). Positions i.i.d. uniform.
inline Zone deploy_bs(const Rect& extent, double density, RngStream& rng,
                      double bs_height = 6.0) {
  if (density <= 0.0) throw ConfigError("deploy_bs: density must be positive");
  if (extent.width <= 0.0 || extent.height <= 0.0)
    throw ConfigError("deploy_bs: degenerate extent");

  const double mean = density * extent.area();
  int count = 0;
  while (count == 0) count = rng.poisson(mean);

  Zone zone;
  zone.extent = extent;
  zone.density = density;
  zone.bs_list.reserve(static_cast<std::size_t>(count));
  for (int id = 0; id < count; ++id) {
    BaseStation bs;
    bs.id = id;
    bs.position = {extent.x0 + rng.uniform() * extent.width,
                   extent.y0 + rng.uniform() * extent.height};
    bs.height = bs_height;
    zone.bs_list.push_back(bs);
  }
  return zone;
}

/// Resamples a waypoint polyline by arclength. M = floor(length/spacing) + 1
/// points, consecutive points exactly `spacing` apart along the path.
inline Trajectory build_trajectory(const std::vector<Vec2>& waypoints,
                                   double spacing,
                                   Mobility mobility = Mobility::pedestrian,
                                   double speed_kmh = 5.0) {
  if (spacing <= 0.0) throw ConfigError("build_trajectory: spacing must be positive");
  if (waypoints.size() < 2) throw ConfigError("build_trajectory: need at least two waypoints");

  double total = 0.0;
  for (std::size_t k = 1; k < waypoints.size(); ++k)
    total += distance(waypoints[k - 1], waypoints[k]);
  if (total < spacing)
    throw ConfigError("build_trajectory: path shorter than spacing");

  const int m = static_cast<int>(std::floor(total / spacing)) + 1;

  Trajectory traj;
  traj.spacing = spacing;
  traj.mobility_class = mobility;
  traj.speed_kmh = speed_kmh;
  traj.points.reserve(static_cast<std::size_t>(m));

  std::size_t seg = 0;
  double seg_start = 0.0;
  double seg_len = distance(waypoints[0], waypoints[1]);
  for (int i = 0; i < m; ++i) {
    const double target = std::min(i * spacing, total);
    while (seg + 2 < waypoints.size() && target > seg_start + seg_len) {
      seg_start += seg_len;
      ++seg;
      seg_len = distance(waypoints[seg], waypoints[seg + 1]);
    }
    const double t = seg_len > 0.0 ? (target - seg_start) / seg_len : 0.0;
    const Vec2& a = waypoints[seg];
    const Vec2& b = waypoints[seg + 1];
    traj.points.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
  }
  return traj;
}

inline double distance_3d(const BaseStation& bs, const Vec2& ue_position,
                          double ue_height) {
  const double horiz = distance(bs.position, ue_position);
  const double dz = bs.height - ue_height;
  return std::sqrt(horiz * horiz + dz * dz);
}

/// Blockage table of one episode: one Bernoulli(p_LoS(d)) draw per
/// (BS, location index), fixed for the whole episode.
class LinkStateTable {
public:
  LinkStateTable(int num_bs, int num_locations)
      : num_bs_(num_bs), num_locations_(num_locations),
        states_(static_cast<std::size_t>(num_bs) * num_locations) {}

  const LinkState& at(int bs, int location) const {
    return states_[index(bs, location)];
  }
  LinkState& at(int bs, int location) { return states_[index(bs, location)]; }

  int num_bs() const { return num_bs_; }
  int num_locations() const { return num_locations_; }

private:
  std::size_t index(int bs, int location) const {
    if (bs < 0 || bs >= num_bs_ || location < 0 || location >= num_locations_)
      throw std::out_of_range("LinkStateTable: index out of range");
    return static_cast<std::size_t>(bs) * num_locations_ + location;
  }

  int num_bs_;
  int num_locations_;
  std::vector<LinkState> states_;
};

/// Draws the blockage table of one episode. Each (BS, location) state is
/// Bernoulli(p_LoS(d)) marginally; with `correlation_m > 0` the state along
/// the trajectory persists over that length scale (a blocker shadows a
/// contiguous stretch of the path), realized as a copy-with-probability
/// chain that leaves the per-location marginals intact.
inline LinkStateTable draw_link_states(const Zone& zone, const Trajectory& traj,
                                       RngStream& rng, double ue_height = 1.5,
                                       double correlation_m = 0.0) {
  LinkStateTable table(zone.num_bs(), traj.size());
  const double copy_prob =
      correlation_m > 0.0 ? std::exp(-traj.spacing / correlation_m) : 0.0;
  for (int j = 0; j < zone.num_bs(); ++j) {
    for (int i = 0; i < traj.size(); ++i) {
      LinkState& link = table.at(j, i);
      link.bs_id = j;
      link.location_index = i;
      link.distance_3d = distance_3d(zone.bs_list[j], traj.points[i], ue_height);
      const double p = los_probability(link.distance_3d);
      if (p >= 1.0) {
        link.los = true;
      } else if (i > 0 && rng.bernoulli(copy_prob)) {
        link.los = table.at(j, i - 1).los;
      } else {
        link.los = rng.bernoulli(p);
      }
    }
  }
  return table;
}

}  // namespace mmhsim

#endif  // MMHSIM_ENVIRONMENT_HPP
