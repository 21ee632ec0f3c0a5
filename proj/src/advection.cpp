#include "stormgen/advection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stormgen/errors.hpp"

namespace stormgen {

std::optional<Vec2> barycenter(std::span<const double> slice, std::span<const Site> sites) {
  double w = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const double v = slice[i];
    if (is_missing(v) || !(v > 0.0)) continue;
    w += v;
    sx += v * sites[i].pos.x;
    sy += v * sites[i].pos.y;
  }
  if (!(w > 0.0)) return std::nullopt;
  return Vec2{sx / w, sy / w};
}

EmpiricalVelocity estimate_velocity(const SpaceTimeData& data, std::int64_t t_start, std::int64_t t_end,
                                    VelocitySource source) {
  t_start = std::max<std::int64_t>(t_start, 0);
  t_end = std::min<std::int64_t>(t_end, static_cast<std::int64_t>(data.n_steps()) - 1);
  std::optional<Vec2> prev;
  Vec2 sum;
  int n = 0;
  for (std::int64_t t = t_start; t <= t_end; ++t) {
    const auto b = barycenter(data.slice(static_cast<std::size_t>(t)), data.sites());
    if (b && prev) {
      sum = sum + (*b - *prev);
      ++n;
    }
    prev = b;
  }
  if (n == 0) throw NoVelocityError("fewer than two consecutive defined barycenters in the window");
  return {(1.0 / n) * sum, source, n};
}

long match_gridded_episode(std::int64_t fine_start, std::int64_t fine_end, const EpisodeCatalog& gridded,
                           std::int64_t pad_seconds) {
  long best = -1;
  std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
  std::int64_t best_time = 0;
  for (std::size_t i = 0; i < gridded.episodes.size(); ++i) {
    const std::int64_t t = gridded.time_of(gridded.episodes[i].t0);
    if (t < fine_start - pad_seconds || t > fine_end + pad_seconds) continue;
    const std::int64_t gap = t > fine_start ? t - fine_start : fine_start - t;
    if (gap < best_gap || (gap == best_gap && t < best_time)) {
      best = static_cast<long>(i);
      best_gap = gap;
      best_time = t;
    }
  }
  return best;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

MatchReport match_and_assign(EpisodeCatalog& fine, const SpaceTimeData& fine_data, const EpisodeCatalog* gridded,
                             const SpaceTimeData* gridded_data, const MatchOptions& opt) {
  MatchReport report;
  report.matched.assign(fine.episodes.size(), -1);
  for (std::size_t i = 0; i < fine.episodes.size(); ++i) {
    Episode& e = fine.episodes[i];
    e.v_emp.reset();
    e.source = VelocitySource::none;
    e.n_displacements = 0;

    const std::int64_t fine_start = fine.time_of(e.t0);
    const std::int64_t fine_end = fine.time_of(e.t0 + e.delta);
    if (gridded != nullptr && gridded_data != nullptr) {
      const long m = match_gridded_episode(fine_start, fine_end, *gridded, opt.pad_seconds);
      report.matched[i] = m;
      if (m >= 0) {
        const Episode& g = gridded->episodes[static_cast<std::size_t>(m)];
        const std::int64_t gstep = gridded->step_seconds;
        const std::int64_t lo_time = fine_start - opt.pad_seconds - gridded->start_time;
        const std::int64_t hi_time = fine_end + opt.pad_seconds - gridded->start_time;
        const std::int64_t lo = std::max(g.t0, -floor_div(-lo_time, gstep));
        const std::int64_t hi = std::min(g.t0 + g.delta - 1, floor_div(hi_time, gstep));
        try {
          const EmpiricalVelocity v = estimate_velocity(*gridded_data, lo, hi, VelocitySource::gridded);
          const double rescale = static_cast<double>(fine.step_seconds) / static_cast<double>(gstep);
          e.v_emp = rescale * v.v;
          e.source = VelocitySource::gridded;
          e.n_displacements = v.n_displacements;
          ++report.n_gridded;
          continue;
        } catch (const NoVelocityError&) {
        }
      }
    }
    try {
      const EmpiricalVelocity v =
          estimate_velocity(fine_data, e.t0, e.t0 + e.delta - 1, VelocitySource::gauge_fallback);
      e.v_emp = v.v;
      e.source = VelocitySource::gauge_fallback;
      e.n_displacements = v.n_displacements;
      ++report.n_fallback;
    } catch (const NoVelocityError&) {
      ++report.n_missing;
    }
  }
  return report;
}

std::optional<Velocity> final_velocity(const Episode& e, const AdvectionTransform& adv) {
  if (!e.v_emp) return std::nullopt;
  return transform_advection(*e.v_emp, adv);
}

SpeedFilterReport filter_speed_range(EpisodeCatalog& catalog, double max_speed) {
  SpeedFilterReport r;
  r.n_before = catalog.episodes.size();
  std::erase_if(catalog.episodes, [&](const Episode& e) { return e.v_emp && e.v_emp->norm() > max_speed; });
  r.n_after = catalog.episodes.size();
  return r;
}

}  // namespace stormgen
