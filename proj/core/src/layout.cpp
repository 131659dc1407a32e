#include "aim/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aim {

namespace {

int side_index(Side s) { return static_cast<int>(s); }

// Rotates a point by k quarter turns counterclockwise. Rotation k maps the
// canonical left-arm entry onto the entry of side k (Left=0, Bottom=1,
// Right=2, Top=3).
std::array<double, 2> rotate_quarter(std::array<double, 2> p, int k) {
  for (int i = 0; i < (k % 4 + 4) % 4; ++i) p = {-p[1], p[0]};
  return p;
}

double inbound_heading(Side s) {
  switch (s) {
    case Side::Left: return 0.0;
    case Side::Bottom: return kPi / 2.0;
    case Side::Right: return kPi;
    case Side::Top: return -kPi / 2.0;
  }
  return 0.0;
}

double outbound_heading(Side s) {
  return wrap_angle(inbound_heading(s) + kPi);
}

}  // namespace

Side side_from_string(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "bottom") return Side::Bottom;
  if (s == "top") return Side::Top;
  throw UnknownRouteError("unknown location '" + s + "' (expected left/right/bottom/top)");
}

std::string side_to_string(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Bottom: return "bottom";
    case Side::Right: return "right";
    case Side::Top: return "top";
  }
  return "?";
}

BoxSpec IntersectionLayout::entry_box(Side side) const {
  double outer = half_extent - entry_outer_inset;
  double inner = outer - entry_depth;
  AxisInterval along{-outer, -inner};  // canonical: left arm, increasing x inward
  AxisInterval lane{-lane_offset - entry_lane_halfwidth,
                    -lane_offset + entry_lane_halfwidth};
  BoxSpec box;
  box.theta = AxisInterval{inbound_heading(side), entry_theta_halfwidth};
  box.v = AxisInterval{entry_v_low, entry_v_high};
  switch (side) {
    case Side::Left:
      box.x = along;
      box.y = lane;
      break;
    case Side::Right:
      box.x = AxisInterval{-along.hi, -along.lo};
      box.y = AxisInterval{-lane.hi, -lane.lo};
      break;
    case Side::Bottom:
      box.x = AxisInterval{-lane.hi, -lane.lo};
      box.y = along;
      break;
    case Side::Top:
      box.x = lane;
      box.y = AxisInterval{-along.hi, -along.lo};
      break;
  }
  return box;
}

BoxSpec IntersectionLayout::exit_box(Side side) const {
  AxisInterval along{exit_center - exit_halflen, exit_center + exit_halflen};
  AxisInterval lane{lane_offset - exit_lane_halfwidth,
                    lane_offset + exit_lane_halfwidth};
  BoxSpec box;
  box.theta = AxisInterval{outbound_heading(side), exit_theta_halfwidth};
  box.v = AxisInterval{exit_v_low, exit_v_high};
  switch (side) {
    case Side::Right:  // outbound lane y = -lane_offset, heading east
      box.x = along;
      box.y = AxisInterval{-lane.hi, -lane.lo};
      break;
    case Side::Left:
      box.x = AxisInterval{-along.hi, -along.lo};
      box.y = lane;
      break;
    case Side::Top:  // northbound lane x = +lane_offset
      box.x = lane;
      box.y = along;
      break;
    case Side::Bottom:  // southbound lane x = -lane_offset
      box.x = AxisInterval{-lane.hi, -lane.lo};
      box.y = AxisInterval{-along.hi, -along.lo};
      break;
  }
  return box;
}

LevelSetField IntersectionLayout::drivable(const GridPtr& grid,
                                           const VehicleModel& model) const {
  double w = road_half_width;
  double slope = speed_band_upper_slope;
  double vmax = model.speed_limit;
  return LevelSetField::from_function(grid, [&](const State& z) {
    double road = std::min(std::abs(z[kDimY]) - w, std::abs(z[kDimX]) - w);
    double speed = std::max(slope * (z[kDimV] - vmax), -z[kDimV]);
    return std::max(road, speed);
  });
}

bool IntersectionLayout::route_exists(Side, Side) const {
  return true;  // all 16 combinations, including same-side U-turns
}

std::vector<std::array<double, 2>> IntersectionLayout::route_polyline(
    Side entry, Side exit, const VehicleModel& model) const {
  int rel = (side_index(exit) - side_index(entry) + 4) % 4;
  double lane = lane_offset;
  double ext = half_extent;

  std::vector<std::array<double, 2>> pts;
  auto arc = [&](std::array<double, 2> center, double radius, double a0, double a1) {
    int n = std::max(4, static_cast<int>(std::ceil(std::abs(a1 - a0) * radius / 0.08)));
    for (int i = 1; i <= n; ++i) {
      double a = a0 + (a1 - a0) * i / n;
      pts.push_back({center[0] + radius * std::cos(a), center[1] + radius * std::sin(a)});
    }
  };

  // Canonical frame: enter from the left arm, eastbound on y = -lane.
  switch (rel) {
    case 2: {  // straight through
      pts = {{-ext, -lane}, {0.0, -lane}, {ext, -lane}};
      break;
    }
    case 1: {  // right turn into the bottom arm (southbound on x = -lane)
      double r = 0.5;
      pts = {{-ext, -lane}};
      arc({-lane - r, -lane - r}, r, kPi / 2.0, 0.0);
      pts.push_back({-lane, -ext});
      break;
    }
    case 3: {  // left turn into the top arm (northbound on x = +lane)
      double r = 0.7;
      pts = {{-ext, -lane}};
      arc({lane - r, -lane + r}, r, -kPi / 2.0, 0.0);
      pts.push_back({lane, ext});
      break;
    }
    case 0: {  // U-turn back into the same arm (westbound on y = +lane)
      double rmin = model.wheel_base / std::tan(0.85 * model.steer_max);
      double r = std::clamp(rmin, 0.30, 0.435);
      double dip = -(road_half_width - 0.07);
      // Keep the loop over the vehicle's own arm so that two mirrored
      // U-turns never meet even after danger dilation.
      double cx = -0.78;
      pts = {{-ext, -lane}, {-1.25, -lane}, {-1.05, dip}, {cx, dip}};
      arc({cx, dip + r}, r, -kPi / 2.0, kPi / 2.0);
      pts.push_back({-0.95, lane});
      pts.push_back({-ext, lane});
      break;
    }
  }

  int k = side_index(entry);
  for (auto& p : pts) p = rotate_quarter(p, k);
  return pts;
}

LevelSetField IntersectionLayout::route_region(const GridPtr& grid, Side entry, Side exit,
                                               const VehicleModel& model) const {
  const auto pts = route_polyline(entry, exit, model);
  const auto& shape = grid->shape();

  // Distance to the polyline on the (x, y) plane, then broadcast.
  std::vector<double> dist(static_cast<std::size_t>(shape[0]) * shape[1]);
  for (int ix = 0; ix < shape[0]; ++ix) {
    const double x = grid->coord(kDimX, ix);
    for (int iy = 0; iy < shape[1]; ++iy) {
      const double y = grid->coord(kDimY, iy);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double ax = pts[i][0], ay = pts[i][1];
        const double bx = pts[i + 1][0], by = pts[i + 1][1];
        const double dx = bx - ax, dy = by - ay;
        const double len2 = dx * dx + dy * dy;
        double s = len2 > 0.0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
        s = std::clamp(s, 0.0, 1.0);
        const double px = ax + s * dx - x, py = ay + s * dy - y;
        best = std::min(best, px * px + py * py);
      }
      dist[static_cast<std::size_t>(ix) * shape[1] + iy] = std::sqrt(best);
    }
  }

  const double w = entry == exit ? uturn_halfwidth : route_halfwidth;
  const auto& sp = grid->spacing();
  const auto& lo = grid->lower();
  return LevelSetField::from_function(grid, [&](const State& z) {
    const int ix = static_cast<int>(std::lround((z[kDimX] - lo[kDimX]) / sp[kDimX]));
    const int iy = static_cast<int>(std::lround((z[kDimY] - lo[kDimY]) / sp[kDimY]));
    return dist[static_cast<std::size_t>(ix) * shape[1] + iy] - w;
  });
}

std::uint64_t IntersectionLayout::hash() const {
  const double fields[] = {half_extent,          road_half_width,
                           lane_offset,          entry_outer_inset,
                           entry_depth,          entry_lane_halfwidth,
                           entry_theta_halfwidth, entry_v_low,
                           entry_v_high,         exit_center,
                           exit_halflen,         exit_lane_halfwidth,
                           exit_theta_halfwidth, exit_v_low,
                           exit_v_high,          speed_band_upper_slope,
                           route_halfwidth,      uturn_halfwidth};
  return fnv1a64(fields, sizeof(fields));
}

}  // namespace aim
