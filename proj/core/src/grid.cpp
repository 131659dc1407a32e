#include "aim/grid.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>

namespace aim {

namespace {

void check_same_grid(const StateGrid& a, const StateGrid& b, const char* op) {
  if (!a.same_as(b)) {
    throw GridMismatchError(std::string(op) + ": operands live on different grids");
  }
}

}  // namespace

StateGrid::StateGrid(std::array<double, 2> bounds_x, std::array<double, 2> bounds_y,
                     std::array<double, 2> bounds_v, std::array<int, 4> shape) {
  lower_ = {bounds_x[0], bounds_y[0], -kPi, bounds_v[0]};
  upper_ = {bounds_x[1], bounds_y[1], kPi, bounds_v[1]};
  shape_ = shape;
  for (int d = 0; d < 4; ++d) {
    if (shape_[d] < 3) {
      throw ConfigError("grid shape must be >= 3 in every dimension");
    }
    if (!(upper_[d] > lower_[d])) {
      throw ConfigError("grid bounds must be strictly increasing");
    }
  }
  for (int d = 0; d < 4; ++d) {
    if (d == kDimTheta) {
      // Periodic: nodes cover [-pi, pi) without the duplicate endpoint.
      spacing_[d] = (upper_[d] - lower_[d]) / shape_[d];
    } else {
      spacing_[d] = (upper_[d] - lower_[d]) / (shape_[d] - 1);
    }
  }
  strides_ = {static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3],
              static_cast<std::size_t>(shape_[2]) * shape_[3],
              static_cast<std::size_t>(shape_[3]), 1};
  size_ = static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2] * shape_[3];
  min_spacing_ = *std::min_element(spacing_.begin(), spacing_.end());
}

std::shared_ptr<const StateGrid> StateGrid::make_default() {
  return std::make_shared<StateGrid>(std::array<double, 2>{-1.5, 1.5},
                                     std::array<double, 2>{-1.5, 1.5},
                                     std::array<double, 2>{0.0, 0.8},
                                     std::array<int, 4>{31, 31, 25, 7});
}

State StateGrid::node(std::size_t flat) const {
  int iv = static_cast<int>(flat % shape_[3]);
  flat /= shape_[3];
  int itheta = static_cast<int>(flat % shape_[2]);
  flat /= shape_[2];
  int iy = static_cast<int>(flat % shape_[1]);
  int ix = static_cast<int>(flat / shape_[1]);
  return {coord(0, ix), coord(1, iy), coord(2, itheta), coord(3, iv)};
}

bool StateGrid::same_as(const StateGrid& other) const {
  return shape_ == other.shape_ && lower_ == other.lower_ && upper_ == other.upper_;
}

std::uint64_t StateGrid::hash() const {
  std::uint64_t h = fnv1a64(lower_.data(), sizeof(lower_));
  h = fnv1a64(upper_.data(), sizeof(upper_), h);
  h = fnv1a64(shape_.data(), sizeof(shape_), h);
  return h;
}

void StateGrid::locate(int dim, double x, int& i0, double& frac) const {
  if (dim == kDimTheta) {
    double t = wrap_angle(x);
    double s = (t - lower_[dim]) / spacing_[dim];
    i0 = static_cast<int>(std::floor(s));
    frac = s - i0;
    if (i0 >= shape_[dim]) {  // t == pi after rounding
      i0 = shape_[dim] - 1;
      frac = 1.0;
    }
    if (i0 < 0) {
      i0 = 0;
      frac = 0.0;
    }
    return;
  }
  double tol = 0.5 * spacing_[dim];
  if (x < lower_[dim] - tol || x > upper_[dim] + tol) {
    std::ostringstream os;
    os << "coordinate " << x << " outside grid dimension " << dim << " ["
       << lower_[dim] << ", " << upper_[dim] << "]";
    throw OutOfBoundsError(os.str());
  }
  double s = (std::clamp(x, lower_[dim], upper_[dim]) - lower_[dim]) / spacing_[dim];
  i0 = static_cast<int>(std::floor(s));
  if (i0 >= shape_[dim] - 1) i0 = shape_[dim] - 2;
  frac = s - i0;
  frac = std::clamp(frac, 0.0, 1.0);
}

LevelSetField::LevelSetField(GridPtr grid, std::vector<float> values)
    : LevelSetField(std::move(grid),
                    std::make_shared<const std::vector<float>>(std::move(values))) {}

LevelSetField::LevelSetField(GridPtr grid, std::shared_ptr<const std::vector<float>> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_->size() != grid_->size()) {
    throw GridMismatchError("field buffer size does not match grid size");
  }
  min_value_ = std::numeric_limits<float>::max();
  for (float v : *values_) min_value_ = std::min(min_value_, v);
}

LevelSetField LevelSetField::constant(GridPtr grid, float value) {
  std::vector<float> vals(grid->size(), value);
  return LevelSetField(std::move(grid), std::move(vals));
}

LevelSetField LevelSetField::from_function(GridPtr grid,
                                           const std::function<double(const State&)>& fn) {
  std::vector<float> vals(grid->size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    vals[i] = static_cast<float>(fn(grid->node(i)));
  }
  return LevelSetField(std::move(grid), std::move(vals));
}

double LevelSetField::interpolate(const State& z) const {
  const StateGrid& g = *grid_;
  int i0[4];
  double f[4];
  for (int d = 0; d < 4; ++d) g.locate(d, z[d], i0[d], f[d]);

  const auto& shape = g.shape();
  const auto& stride = g.strides();
  const std::vector<float>& vals = *values_;

  double acc = 0.0;
  for (int corner = 0; corner < 16; ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    for (int d = 0; d < 4; ++d) {
      int hi = (corner >> d) & 1;
      int i = i0[d] + hi;
      if (d == kDimTheta) {
        if (i >= shape[d]) i -= shape[d];
      }
      w *= hi ? f[d] : (1.0 - f[d]);
      idx += static_cast<std::size_t>(i) * stride[d];
    }
    if (w != 0.0) acc += w * vals[idx];
  }
  return acc;
}

LevelSetField set_union(const LevelSetField& a, const LevelSetField& b) {
  check_same_grid(a.grid(), b.grid(), "set_union");
  std::vector<float> out(a.values().size());
  const auto& va = a.values();
  const auto& vb = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(va[i], vb[i]);
  return LevelSetField(a.grid_ptr(), std::move(out));
}

LevelSetField set_intersection(const LevelSetField& a, const LevelSetField& b) {
  check_same_grid(a.grid(), b.grid(), "set_intersection");
  std::vector<float> out(a.values().size());
  const auto& va = a.values();
  const auto& vb = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(va[i], vb[i]);
  return LevelSetField(a.grid_ptr(), std::move(out));
}

LevelSetField set_complement(const LevelSetField& a) {
  std::vector<float> out(a.values().size());
  const auto& va = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -va[i];
  return LevelSetField(a.grid_ptr(), std::move(out));
}

TimeStateSet::TimeStateSet(double t0, double dt, std::vector<LevelSetField> slices)
    : t0_(t0), dt_(dt), slices_(std::move(slices)) {
  if (slices_.empty()) throw ConfigError("TimeStateSet needs at least one slice");
  if (!(dt_ > 0.0)) throw ConfigError("TimeStateSet dt must be positive");
  const StateGrid& g = slices_.front().grid();
  for (const auto& s : slices_) {
    check_same_grid(g, s.grid(), "TimeStateSet");
  }
}

TimeStateSet TimeStateSet::constant(GridPtr grid, double t0, double dt,
                                    std::size_t count, float value) {
  return broadcast(LevelSetField::constant(std::move(grid), value), t0, dt, count);
}

TimeStateSet TimeStateSet::broadcast(const LevelSetField& field, double t0, double dt,
                                     std::size_t count) {
  std::vector<LevelSetField> slices(count, field);
  return TimeStateSet(t0, dt, std::move(slices));
}

bool TimeStateSet::covers(double t) const {
  double tol = 0.5 * dt_;
  return t >= t0_ - tol && t <= t_end() + tol;
}

std::size_t TimeStateSet::nearest_slice(double t) const {
  if (!covers(t)) {
    std::ostringstream os;
    os << "time " << t << " outside set range [" << t0_ << ", " << t_end() << "]";
    throw TimeRangeMismatchError(os.str());
  }
  long k = std::lround((t - t0_) / dt_);
  k = std::clamp<long>(k, 0, static_cast<long>(slices_.size()) - 1);
  return static_cast<std::size_t>(k);
}

void TimeStateSet::bracket(double t, std::size_t& k0, std::size_t& k1, double& w) const {
  if (!covers(t)) {
    std::ostringstream os;
    os << "time " << t << " outside set range [" << t0_ << ", " << t_end() << "]";
    throw TimeRangeMismatchError(os.str());
  }
  double s = (t - t0_) / dt_;
  long lo = static_cast<long>(std::floor(s));
  lo = std::clamp<long>(lo, 0, static_cast<long>(slices_.size()) - 1);
  long hi = std::min<long>(lo + 1, static_cast<long>(slices_.size()) - 1);
  k0 = static_cast<std::size_t>(lo);
  k1 = static_cast<std::size_t>(hi);
  w = std::clamp(s - lo, 0.0, 1.0);
}

double TimeStateSet::value_at(const State& z, double t) const {
  std::size_t k0, k1;
  double w;
  bracket(t, k0, k1, w);
  double v0 = slices_[k0].interpolate(z);
  if (k1 == k0) return v0;
  double v1 = slices_[k1].interpolate(z);
  return std::max(v0, v1);
}

namespace {

void check_aligned(const TimeStateSet& a, const TimeStateSet& b, const char* op) {
  check_same_grid(a.grid(), b.grid(), op);
  if (std::abs(a.dt() - b.dt()) > 1e-12) {
    throw TimeRangeMismatchError(std::string(op) + ": time steps differ");
  }
  double offset = (b.t0() - a.t0()) / a.dt();
  if (std::abs(offset - std::round(offset)) > 1e-9) {
    throw TimeRangeMismatchError(std::string(op) + ": slice lattices are not aligned");
  }
}

template <typename Op>
TimeStateSet slicewise(const TimeStateSet& a, const TimeStateSet& b, const char* name,
                       Op op) {
  check_aligned(a, b, name);
  if (a.slice_count() != b.slice_count() || std::abs(a.t0() - b.t0()) > 1e-9) {
    throw TimeRangeMismatchError(std::string(name) + ": time ranges differ");
  }
  std::vector<LevelSetField> out;
  out.reserve(a.slice_count());
  for (std::size_t k = 0; k < a.slice_count(); ++k) {
    out.push_back(op(a.slice(k), b.slice(k)));
  }
  return TimeStateSet(a.t0(), a.dt(), std::move(out));
}

}  // namespace

TimeStateSet set_union(const TimeStateSet& a, const TimeStateSet& b) {
  return slicewise(a, b, "set_union", [](const auto& x, const auto& y) {
    return set_union(x, y);
  });
}

TimeStateSet set_intersection(const TimeStateSet& a, const TimeStateSet& b) {
  return slicewise(a, b, "set_intersection", [](const auto& x, const auto& y) {
    return set_intersection(x, y);
  });
}

TimeStateSet set_complement(const TimeStateSet& a) {
  std::vector<LevelSetField> out;
  out.reserve(a.slice_count());
  for (std::size_t k = 0; k < a.slice_count(); ++k) {
    out.push_back(set_complement(a.slice(k)));
  }
  return TimeStateSet(a.t0(), a.dt(), std::move(out));
}

bool is_empty(const TimeStateSet& a) {
  if (a.slice_count() == 0) return true;
  double eps = a.grid().epsilon_empty();
  for (std::size_t k = 0; k < a.slice_count(); ++k) {
    if (a.slice(k).min_value() <= -eps) return false;
  }
  return true;
}

double containment_margin(const TimeStateSet& container, const TimeStateSet& contained) {
  check_aligned(container, contained, "contains");
  double margin = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < contained.slice_count(); ++k) {
    double t = contained.time_of(k);
    std::size_t ck = container.nearest_slice(t);
    const auto& inner = contained.slice(k).values();
    const auto& outer = container.slice(ck).values();
    for (std::size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] <= 0.0f) {
        margin = std::max(margin, static_cast<double>(outer[i]));
      }
    }
  }
  return margin;
}

bool contains(const TimeStateSet& container, const TimeStateSet& contained,
              double margin) {
  return containment_margin(container, contained) <= margin;
}

double value_excess(const TimeStateSet& container, const TimeStateSet& contained) {
  check_aligned(container, contained, "value_excess");
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < contained.slice_count(); ++k) {
    std::size_t ck = container.nearest_slice(contained.time_of(k));
    const auto& inner = contained.slice(k).values();
    const auto& outer = container.slice(ck).values();
    if (inner.data() == outer.data()) {  // shared slice, excess exactly 0
      excess = std::max(excess, 0.0);
      continue;
    }
    for (std::size_t i = 0; i < inner.size(); ++i) {
      excess = std::max(excess, static_cast<double>(outer[i]) - inner[i]);
    }
  }
  return excess;
}

double intersection_min(const TimeStateSet& a, const TimeStateSet& b) {
  check_aligned(a, b, "intersection_min");
  double best = kEmptyValue;
  for (std::size_t k = 0; k < a.slice_count(); ++k) {
    double t = a.time_of(k);
    if (!b.covers(t)) continue;
    const auto& av = a.slice(k).values();
    const auto& bv = b.slice(b.nearest_slice(t)).values();
    if (a.slice(k).min_value() > -a.grid().epsilon_empty()) continue;
    for (std::size_t i = 0; i < av.size(); ++i) {
      best = std::min(best, static_cast<double>(std::max(av[i], bv[i])));
    }
  }
  return best;
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace aim
