#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stormgen/data.hpp"
#include "stormgen/dependence.hpp"
#include "stormgen/episodes.hpp"

namespace stormgen {

/// Intensity-weighted mean position of one time slice. Missing and
/// non-positive values carry no weight; std::nullopt when the slice is dry.
std::optional<Vec2> barycenter(std::span<const double> slice, std::span<const Site> sites);

struct EmpiricalVelocity {
  Velocity v;  // meters per step
  VelocitySource source = VelocitySource::gridded;
  int n_displacements = 0;
};

/// Averages barycenter displacements between consecutive steps of
/// [t_start, t_end] (inclusive). Pairs touching an undefined barycenter are
/// skipped. Throws NoVelocityError when no pair is usable.
EmpiricalVelocity estimate_velocity(const SpaceTimeData& data, std::int64_t t_start, std::int64_t t_end,
                                    VelocitySource source = VelocitySource::gridded);

struct MatchOptions {
  std::int64_t pad_seconds = 2 * 3600;
};

struct MatchReport {
  std::size_t n_gridded = 0;
  std::size_t n_fallback = 0;
  std::size_t n_missing = 0;
  /// Index into the gridded catalog per fine episode, or -1.
  std::vector<long> matched;
};

/// Index of the gridded episode matched to a fine-scale episode starting at
/// `fine_start` (Unix seconds), or -1. Candidates have their conditioning time
/// in [fine_start - pad, fine_end + pad]; the one nearest to fine_start wins,
/// earlier on ties.
long match_gridded_episode(std::int64_t fine_start, std::int64_t fine_end,
                           const EpisodeCatalog& gridded, std::int64_t pad_seconds);

/// Assigns an empirical velocity to every fine-scale episode: from the matched
/// gridded episode (its own window intersected with the padded window,
/// converted to the fine time step), else from the gauges themselves.
/// Episodes with neither get source = none and no velocity.
MatchReport match_and_assign(EpisodeCatalog& fine, const SpaceTimeData& fine_data,
                             const EpisodeCatalog* gridded, const SpaceTimeData* gridded_data,
                             const MatchOptions& opt = {});

/// Velocity the dependence model uses for an episode: A(V_emp).
std::optional<Velocity> final_velocity(const Episode& e, const AdvectionTransform& adv);

struct SpeedFilterReport {
  std::size_t n_before = 0;
  std::size_t n_after = 0;
  double fraction_removed() const {
    return n_before == 0 ? 0.0 : static_cast<double>(n_before - n_after) / static_cast<double>(n_before);
  }
};

/// Drops episodes whose empirical speed exceeds `max_speed` (meters per step).
/// Episodes without a velocity are kept.
SpeedFilterReport filter_speed_range(EpisodeCatalog& catalog, double max_speed);

}  // namespace stormgen
