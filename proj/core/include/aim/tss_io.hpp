#pragma once

#include <string>

#include "aim/grid.hpp"

namespace aim {

// Corridor file format (.tss): one JSON header line
//   {"shape":[...],"bounds":[[lo,hi] x4],"t0":...,"dt":...}
// followed by the slices as flat little-endian float32 arrays in dimension
// order (x, y, theta, v).
void write_tss(const std::string& path, const TimeStateSet& tss);
TimeStateSet read_tss(const std::string& path);

}  // namespace aim
