#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aim/dynamics.hpp"
#include "aim/shapes.hpp"

namespace aim {

enum class Side { Left, Bottom, Right, Top };

Side side_from_string(const std::string& s);
std::string side_to_string(Side s);

// Four-way intersection with two-lane roads and right-hand traffic. Entry
// regions sit on the inbound lane of each arm; exit regions are small boxes
// on the outbound lane near the arm's end, sized so that a granted exit
// window covers the whole region. Box bounds deliberately fall between grid
// nodes so containment checks bite only at strictly interior nodes.
struct IntersectionLayout {
  double half_extent = 1.5;        // arm length from the center
  double road_half_width = 0.5;
  double lane_offset = 0.25;

  double entry_outer_inset = 0.06;
  double entry_depth = 0.30;  // leaves creep runway ahead of the box for queued vehicles
  double entry_lane_halfwidth = 0.11;
  double entry_theta_halfwidth = 0.19;
  double entry_v_low = 0.02;       // the v=0 plane rides the speed-band boundary
  double entry_v_high = 0.42;

  // The exit box needs real interior depth on the working grid (a sizeable
  // fraction of a cell on every axis), otherwise the backward solve has no
  // negative mass to propagate.
  double exit_center = 1.30;       // along the outbound arm
  double exit_halflen = 0.15;
  double exit_lane_halfwidth = 0.16;
  double exit_theta_halfwidth = 0.32;
  double exit_v_low = 0.02;
  double exit_v_high = 0.30;

  double speed_band_upper_slope = 3.0;

  // Lane-keeping corridor half-width around the route centerline. Narrow
  // enough that a dilated corridor stays out of the opposing lane, wide
  // enough to leave several interior rows on the working grid. U-turns get
  // extra width: their heading sweep runs diagonally through the grid and
  // needs the room to keep usable depth.
  double route_halfwidth = 0.20;
  double uturn_halfwidth = 0.24;

  BoxSpec entry_box(Side side) const;
  BoxSpec exit_box(Side side) const;

  // Static state constraint: on-road position and the legal speed band. The
  // upper speed bound uses a steeper slope so interpolated values just above
  // the limit are decisively positive.
  LevelSetField drivable(const GridPtr& grid, const VehicleModel& model) const;

  bool route_exists(Side entry, Side exit) const;

  // Reference centerline polyline for the nominal rollout controller and the
  // route's lane-keeping region. The corridor solver decides feasibility.
  std::vector<std::array<double, 2>> route_polyline(Side entry, Side exit,
                                                    const VehicleModel& model) const;

  // Lane-keeping region for a route: the centerline polyline dilated by
  // route_halfwidth, broadcast over heading and speed. Intersected into the
  // static constraints of the route's offline pass.
  LevelSetField route_region(const GridPtr& grid, Side entry, Side exit,
                             const VehicleModel& model) const;

  std::uint64_t hash() const;
};

}  // namespace aim
