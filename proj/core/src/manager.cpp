#include "aim/manager.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace aim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform (lower envelope of parabolas), spacing h.
// Infinite entries (no seed anywhere in that line so far) never contribute a
// parabola; a line with no finite entry stays infinite.
void transform_1d(const std::vector<double>& f, double h, std::vector<double>& out,
                  std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  const double h2 = h * h;
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      int p = v[k];
      s = ((f[q] + h2 * q * q) - (f[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    int p = v[k];
    out[q] = h2 * (q - p) * (q - p) + f[p];
  }
}

// Squared Euclidean distance to the seed set over an (nx, ny) grid.
void squared_edt(const std::vector<char>& seed, int nx, int ny, double hx, double hy,
                 std::vector<double>& dist) {
  dist.assign(static_cast<std::size_t>(nx) * ny, kInf);
  for (std::size_t i = 0; i < seed.size(); ++i) {
    if (seed[i]) dist[i] = 0.0;
  }
  std::vector<double> line, out;
  std::vector<int> v;
  std::vector<double> z;
  // Columns (vary iy at fixed ix), spacing hy.
  line.resize(ny);
  out.resize(ny);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) line[iy] = dist[static_cast<std::size_t>(ix) * ny + iy];
    transform_1d(line, hy, out, v, z);
    for (int iy = 0; iy < ny; ++iy) dist[static_cast<std::size_t>(ix) * ny + iy] = out[iy];
  }
  // Rows (vary ix at fixed iy), spacing hx.
  line.resize(nx);
  out.resize(nx);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) line[ix] = dist[static_cast<std::size_t>(ix) * ny + iy];
    transform_1d(line, hx, out, v, z);
    for (int ix = 0; ix < nx; ++ix) dist[static_cast<std::size_t>(ix) * ny + iy] = out[ix];
  }
}

std::string format_id(std::uint64_t rank) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "res-%04llu", static_cast<unsigned long long>(rank));
  return buf;
}

}  // namespace

DangerSet build_danger_set(const CorridorReservation& reservation,
                           double footprint_radius) {
  const TimeStateSet& corridor = reservation.corridor;
  const StateGrid& grid = corridor.grid();
  const auto& shape = grid.shape();
  const int nx = shape[0], ny = shape[1];
  const std::size_t inner = static_cast<std::size_t>(shape[2]) * shape[3];
  const double hx = grid.spacing()[0], hy = grid.spacing()[1];

  LevelSetField pad = LevelSetField::constant(corridor.grid_ptr(), kEmptyValue);
  std::vector<LevelSetField> slices(corridor.slice_count(), pad);

  std::vector<double> proj(static_cast<std::size_t>(nx) * ny);
  std::vector<char> inside(proj.size());
  std::vector<char> outside(proj.size());
  std::vector<double> dist_out, dist_in;

  for (std::size_t k = 0; k < corridor.slice_count(); ++k) {
    const LevelSetField& slice = corridor.slice(k);
    if (slice.min_value() > 0.0f) continue;  // no occupied node, keep the pad

    const auto& values = slice.values();
    bool any_inside = false;
    for (std::size_t c = 0; c < proj.size(); ++c) {
      const float* block = values.data() + c * inner;
      float m = block[0];
      for (std::size_t i = 1; i < inner; ++i) m = std::min(m, block[i]);
      proj[c] = m;
      inside[c] = m <= 0.0f;
      outside[c] = !inside[c];
      any_inside |= inside[c] != 0;
    }
    if (!any_inside) continue;

    squared_edt(inside, nx, ny, hx, hy, dist_out);
    squared_edt(outside, nx, ny, hx, hy, dist_in);

    std::vector<float> buf(grid.size());
    for (std::size_t c = 0; c < proj.size(); ++c) {
      double signed_dist = std::sqrt(dist_out[c]) - std::sqrt(dist_in[c]);
      float value = static_cast<float>(signed_dist - footprint_radius);
      float* block = buf.data() + c * inner;
      for (std::size_t i = 0; i < inner; ++i) block[i] = value;
    }
    slices[k] = LevelSetField(corridor.grid_ptr(), std::move(buf));
  }

  return DangerSet{reservation.reservation_id,
                   TimeStateSet(corridor.t0(), corridor.dt(), std::move(slices))};
}

ReservationManager::ReservationManager(std::shared_ptr<const CorridorPipeline> pipeline,
                                       ManagerOptions opts)
    : pipeline_(std::move(pipeline)), opts_(opts) {
  if (!pipeline_) throw ConfigError("reservation manager needs a pipeline");
}

ReserveOutcome ReservationManager::reserve(const std::string& vehicle_id,
                                           const std::string& entry_loc, double entry_t0,
                                           double entry_t1, const std::string& exit_loc,
                                           double delta) {
  std::lock_guard<std::mutex> admission(admit_mutex_);
  ReserveOutcome out;
  try {
    Route route{side_from_string(entry_loc), side_from_string(exit_loc)};
    if (entry_t1 > opts_.scheduling_horizon) {
      throw HorizonExceededError("entry window ends beyond the scheduling horizon");
    }
    EntryExitSpec spec = pipeline_->make_spec(route, entry_t0, entry_t1, delta);

    // Union of the active danger sets, sharing slices wherever only one (or
    // no) reservation occupies a time step.
    std::vector<std::shared_ptr<const DangerSet>> dangers = active_dangers();
    TimeStateSet danger_union;
    double window_t0 = 0.0, window_t1 = 0.0;
    if (!dangers.empty()) {
      const TimeStateSet& lattice = pipeline_->constraint();
      const std::size_t n = lattice.slice_count();
      LevelSetField pad = LevelSetField::constant(pipeline_->grid_ptr(), kEmptyValue);
      std::vector<LevelSetField> slices(n, pad);
      const double eps = pipeline_->grid().epsilon_empty();
      long first = -1, last = -1;
      for (std::size_t k = 0; k < n; ++k) {
        std::vector<const LevelSetField*> parts;
        for (const auto& d : dangers) {
          if (k < d->occupancy.slice_count()) {
            const LevelSetField& f = d->occupancy.slice(k);
            if (f.min_value() <= -eps) parts.push_back(&f);
          }
        }
        if (parts.empty()) continue;
        if (parts.size() == 1) {
          slices[k] = *parts[0];
        } else {
          LevelSetField acc = *parts[0];
          for (std::size_t i = 1; i < parts.size(); ++i) acc = set_union(acc, *parts[i]);
          slices[k] = acc;
        }
        if (first < 0) first = static_cast<long>(k);
        last = static_cast<long>(k);
      }
      if (first >= 0) {
        window_t0 = lattice.time_of(static_cast<std::size_t>(first)) - lattice.dt();
        window_t1 = lattice.time_of(static_cast<std::size_t>(last)) + lattice.dt();
        danger_union = TimeStateSet(lattice.t0(), lattice.dt(), std::move(slices));
      }
    }

    PassResult passes = pipeline_->run(route, spec, danger_union, window_t0, window_t1);

    auto record = std::make_shared<CorridorReservation>();
    record->vehicle_id = vehicle_id;
    record->route = route;
    record->entry_t0 = spec.entry_t0;
    record->entry_t1 = spec.entry_t1;
    record->exit_t0 = passes.exit_t0;
    record->exit_t1 = passes.exit_t1;
    record->corridor = passes.phi4;
    record->status = ReservationStatus::Active;

    {
      std::lock_guard<std::mutex> lock(store_mutex_);
      record->rank = ++next_rank_;
      record->reservation_id = format_id(record->rank);
    }
    auto danger =
        std::make_shared<DangerSet>(build_danger_set(*record, opts_.footprint_radius));
    {
      std::lock_guard<std::mutex> lock(store_mutex_);
      entries_[record->reservation_id] = Entry{record, danger};
    }

    out.ok = true;
    out.reservation_id = record->reservation_id;
    out.entry_t0 = record->entry_t0;
    out.entry_t1 = record->entry_t1;
    out.exit_t0 = record->exit_t0;
    out.exit_t1 = record->exit_t1;
    out.timings = passes.timings;
    out.passes = std::make_shared<const PassResult>(std::move(passes));
  } catch (const EntryInfeasibleError& e) {
    out.error_code = e.code();
    out.message = e.what();
    out.margin = e.margin;
  } catch (const ExitInfeasibleError& e) {
    out.error_code = e.code();
    out.message = e.what();
    out.margin = e.margin;
  } catch (const Error& e) {
    out.error_code = e.code();
    out.message = e.what();
  }
  return out;
}

HalfSpaceLimit ReservationManager::query_limits(const std::string& reservation_id,
                                                const State& z, double steer,
                                                double t) const {
  std::shared_ptr<const CorridorReservation> record = find(reservation_id);
  if (!record || record->status != ReservationStatus::Active) {
    throw UnknownReservationError("no active reservation " + reservation_id);
  }
  return driving_limits(record->corridor, pipeline_->model(), z, steer, t);
}

void ReservationManager::release(const std::string& reservation_id) {
  std::lock_guard<std::mutex> lock(store_mutex_);
  auto it = entries_.find(reservation_id);
  if (it == entries_.end()) {
    throw UnknownReservationError("unknown reservation " + reservation_id);
  }
  if (it->second.record->status == ReservationStatus::Released) return;
  auto released = std::make_shared<CorridorReservation>(*it->second.record);
  released->status = ReservationStatus::Released;
  it->second.record = released;
}

std::shared_ptr<const CorridorReservation> ReservationManager::find(
    const std::string& reservation_id) const {
  std::lock_guard<std::mutex> lock(store_mutex_);
  auto it = entries_.find(reservation_id);
  return it == entries_.end() ? nullptr : it->second.record;
}

std::vector<std::shared_ptr<const CorridorReservation>> ReservationManager::active() const {
  std::lock_guard<std::mutex> lock(store_mutex_);
  std::vector<std::shared_ptr<const CorridorReservation>> out;
  for (const auto& [id, entry] : entries_) {
    if (entry.record->status == ReservationStatus::Active) out.push_back(entry.record);
  }
  return out;
}

std::vector<std::shared_ptr<const DangerSet>> ReservationManager::active_dangers() const {
  std::lock_guard<std::mutex> lock(store_mutex_);
  std::vector<std::shared_ptr<const DangerSet>> out;
  for (const auto& [id, entry] : entries_) {
    if (entry.record->status == ReservationStatus::Active) out.push_back(entry.danger);
  }
  return out;
}

}  // namespace aim
