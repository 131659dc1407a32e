#include "aim/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aim {

double box_value(const BoxSpec& box, const State& z) {
  double value = -std::numeric_limits<double>::infinity();
  auto axis = [&](const std::optional<AxisInterval>& iv, double x) {
    if (!iv) return;
    value = std::max(value, std::max(iv->lo - x, x - iv->hi));
  };
  axis(box.x, z[kDimX]);
  axis(box.y, z[kDimY]);
  axis(box.v, z[kDimV]);
  if (box.theta) {
    double d = std::abs(wrap_angle(z[kDimTheta] - box.theta->lo)) - box.theta->hi;
    value = std::max(value, d);
  }
  return value;
}

LevelSetField box_field(const GridPtr& grid, const BoxSpec& box) {
  return LevelSetField::from_function(grid, [&](const State& z) {
    return box_value(box, z);
  });
}

}  // namespace aim
