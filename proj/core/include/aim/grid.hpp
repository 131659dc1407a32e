#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "aim/errors.hpp"

namespace aim {

// State ordering is fixed across the project: [x, y, theta, v].
using State = std::array<double, 4>;

constexpr int kDimX = 0;
constexpr int kDimY = 1;
constexpr int kDimTheta = 2;
constexpr int kDimV = 3;

constexpr double kPi = 3.14159265358979323846;

// Value assigned to padding slices that represent "nowhere". Large enough to
// dominate any field produced from the bounded state domain.
constexpr float kEmptyValue = 1.0e3f;

inline double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  return t - kPi;
}

// Rectangular 4-D grid over (x, y, theta, v). Theta is periodic over
// [-pi, pi): its nodes cover the period with equal intervals and no duplicate
// endpoint. The other dimensions place nodes on both interval endpoints.
class StateGrid {
public:
  StateGrid(std::array<double, 2> bounds_x, std::array<double, 2> bounds_y,
            std::array<double, 2> bounds_v, std::array<int, 4> shape);

  static std::shared_ptr<const StateGrid> make_default();

  const std::array<int, 4>& shape() const { return shape_; }
  const std::array<double, 4>& lower() const { return lower_; }
  const std::array<double, 4>& upper() const { return upper_; }
  const std::array<double, 4>& spacing() const { return spacing_; }

  std::size_t size() const { return size_; }
  const std::array<std::size_t, 4>& strides() const { return strides_; }

  std::size_t index(int ix, int iy, int itheta, int iv) const {
    return static_cast<std::size_t>(ix) * strides_[0] +
           static_cast<std::size_t>(iy) * strides_[1] +
           static_cast<std::size_t>(itheta) * strides_[2] +
           static_cast<std::size_t>(iv);
  }

  double coord(int dim, int i) const { return lower_[dim] + spacing_[dim] * i; }
  State node(std::size_t flat) const;

  double min_spacing() const { return min_spacing_; }
  // Threshold below which a set is treated as empty (sub-cell slivers).
  double epsilon_empty() const { return min_spacing_ / 10.0; }

  bool same_as(const StateGrid& other) const;
  std::uint64_t hash() const;

  // Locates x along dimension `dim`: fills the lower node index and the
  // fractional offset in [0, 1]. Theta wraps; other dimensions throw
  // OutOfBounds beyond a half-spacing tolerance and clamp within it.
  void locate(int dim, double x, int& i0, double& frac) const;

private:
  std::array<double, 4> lower_{};
  std::array<double, 4> upper_{};
  std::array<int, 4> shape_{};
  std::array<double, 4> spacing_{};
  std::array<std::size_t, 4> strides_{};
  std::size_t size_ = 0;
  double min_spacing_ = 0.0;
};

using GridPtr = std::shared_ptr<const StateGrid>;

// Immutable level-set field over a StateGrid at one time instant. A state is
// inside the represented set iff the (interpolated) value is <= 0. Buffers are
// shared, so copying fields and reusing one slice across many times is cheap.
class LevelSetField {
public:
  LevelSetField() = default;
  LevelSetField(GridPtr grid, std::vector<float> values);
  LevelSetField(GridPtr grid, std::shared_ptr<const std::vector<float>> values);

  static LevelSetField constant(GridPtr grid, float value);
  static LevelSetField from_function(GridPtr grid,
                                     const std::function<double(const State&)>& fn);

  const StateGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<float>& values() const { return *values_; }
  std::shared_ptr<const std::vector<float>> values_ptr() const { return values_; }

  float operator[](std::size_t i) const { return (*values_)[i]; }
  float min_value() const { return min_value_; }
  bool is_empty() const { return min_value_ > -grid_->epsilon_empty(); }
  bool valid() const { return static_cast<bool>(grid_); }

  double interpolate(const State& z) const;

private:
  GridPtr grid_;
  std::shared_ptr<const std::vector<float>> values_;
  float min_value_ = kEmptyValue;
};

LevelSetField set_union(const LevelSetField& a, const LevelSetField& b);
LevelSetField set_intersection(const LevelSetField& a, const LevelSetField& b);
LevelSetField set_complement(const LevelSetField& a);

// Time-indexed sequence of fields on a uniform lattice t0 + k*dt.
class TimeStateSet {
public:
  TimeStateSet() = default;
  TimeStateSet(double t0, double dt, std::vector<LevelSetField> slices);

  static TimeStateSet constant(GridPtr grid, double t0, double dt,
                               std::size_t count, float value);
  // Broadcasts one field across `count` slices sharing a single buffer.
  static TimeStateSet broadcast(const LevelSetField& field, double t0, double dt,
                                std::size_t count);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double t_end() const { return t0_ + dt_ * (slices_.size() - 1); }
  std::size_t slice_count() const { return slices_.size(); }
  double time_of(std::size_t k) const { return t0_ + dt_ * k; }

  const LevelSetField& slice(std::size_t k) const { return slices_[k]; }
  const std::vector<LevelSetField>& slices() const { return slices_; }
  const StateGrid& grid() const { return slices_.front().grid(); }
  const GridPtr& grid_ptr() const { return slices_.front().grid_ptr(); }

  bool covers(double t) const;
  // Nearest lattice index for t; throws TimeRangeMismatch when t is outside
  // the covered range (beyond a half-step tolerance).
  std::size_t nearest_slice(double t) const;
  // Bracketing indices and interpolation weight for t within range.
  void bracket(double t, std::size_t& k0, std::size_t& k1, double& w) const;

  // Conservative membership value at (z, t): the larger of the two bracketing
  // slice interpolants, so a state is reported inside only if both agree.
  double value_at(const State& z, double t) const;

private:
  double t0_ = 0.0;
  double dt_ = 0.0;
  std::vector<LevelSetField> slices_;
};

TimeStateSet set_union(const TimeStateSet& a, const TimeStateSet& b);
TimeStateSet set_intersection(const TimeStateSet& a, const TimeStateSet& b);
TimeStateSet set_complement(const TimeStateSet& a);

bool is_empty(const TimeStateSet& a);

// Worst containment margin: max over contained-inside nodes of the container's
// value, over all slices of `contained`. Negative/zero means contained.
// Returns -inf when `contained` has no inside nodes at all.
double containment_margin(const TimeStateSet& container, const TimeStateSet& contained);

// True iff every node inside `contained` has container value <= margin.
bool contains(const TimeStateSet& container, const TimeStateSet& contained,
              double margin);

// Max over all slices and nodes of (container value - contained value).
// <= eps means the contained set is nested in the container pointwise.
double value_excess(const TimeStateSet& container, const TimeStateSet& contained);

// Min over all slices and nodes of max(a, b): the emptiness level of the
// intersection. > -epsilon_empty means the sets never meet.
double intersection_min(const TimeStateSet& a, const TimeStateSet& b);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace aim
