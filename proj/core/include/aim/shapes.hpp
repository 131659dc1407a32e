#pragma once

#include <optional>

#include "aim/grid.hpp"

namespace aim {

struct AxisInterval {
  double lo;
  double hi;
};

// Axis-aligned box in state space, with optional per-axis constraints. The
// field value is the largest per-axis violation, so the sign is exact and the
// magnitude behaves like a distance along the dominating axis. Theta is
// specified as center +/- halfwidth and measured with angular wrapping.
struct BoxSpec {
  std::optional<AxisInterval> x;
  std::optional<AxisInterval> y;
  std::optional<AxisInterval> theta;  // lo = center, hi = halfwidth
  std::optional<AxisInterval> v;
};

double box_value(const BoxSpec& box, const State& z);
LevelSetField box_field(const GridPtr& grid, const BoxSpec& box);

}  // namespace aim
