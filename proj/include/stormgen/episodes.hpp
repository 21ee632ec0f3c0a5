#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stormgen/data.hpp"
#include "stormgen/geometry.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

struct EpisodeConfig {
  double q = 0.95;
  int delta = 12;          // steps
  double min_separation = 1200.0;  // meters
  std::optional<std::size_t> max_episodes;
};

void validate(const EpisodeConfig& c);

enum class VelocitySource { none, gridded, gauge_fallback };

struct Episode {
  int id = 0;
  std::size_t site = 0;  // conditioning site (or pixel) index
  std::int64_t t0 = 0;   // conditioning step index
  int delta = 0;
  std::optional<Velocity> v_emp;  // meters per step of the catalog's time axis
  VelocitySource source = VelocitySource::none;
  int n_displacements = 0;
  /// Window values, time-major (delta x n_sites); NaN beyond the record or missing.
  std::vector<double> window;

  double value(int tau, std::size_t s, std::size_t n_sites) const {
    return window[static_cast<std::size_t>(tau) * n_sites + s];
  }
};

/// Selected episodes together with the geometry and time axis they refer to.
struct EpisodeCatalog {
  std::vector<Site> sites;
  std::int64_t start_time = 0;
  std::int64_t step_seconds = 1;
  double threshold = 0.0;
  std::vector<Episode> episodes;

  std::size_t n_sites() const { return sites.size(); }
  std::int64_t time_of(std::int64_t step) const { return start_time + step * step_seconds; }
};

struct QuantileOptions {
  /// Quantile over strictly positive values only (default) or over all values.
  bool positive_only = true;
};

/// Empirical quantile (inverse-ECDF convention, see stats.hpp) over all
/// non-missing space-time values. Throws DataError when no usable value exists.
double threshold_from_quantile(const SpaceTimeData& data, double q, const QuantileOptions& opt = {});

/// Conditioning candidates (all X > u), processed chronologically with ties
/// broken by site id. A candidate is kept if, for every kept episode,
/// distance >= d_min or |dt| >= delta.
EpisodeCatalog select_episodes(const SpaceTimeData& data, double u, const EpisodeConfig& config);

/// Fills each episode's window from the data (used after loading a catalog file).
void attach_windows(EpisodeCatalog& catalog, const SpaceTimeData& data);

/// Number of (s, t) within the episode window with X > u, including the conditioning point.
int count_exceedances(const Episode& e, double u);

struct DistanceBin {
  double lo = 0.0;  // inclusive
  double hi = 0.0;  // exclusive
};

/// Spatial distance classes and individual temporal lags 0..max_tau.
struct LagClasses {
  std::vector<DistanceBin> spatial;
  int max_tau = 0;

  /// Index of the class containing d, or -1.
  int spatial_class(double d) const;
  std::size_t n_temporal() const { return static_cast<std::size_t>(max_tau) + 1; }
  std::size_t size() const { return spatial.size() * n_temporal(); }
  std::size_t index(std::size_t spatial_class, int tau) const {
    return spatial_class * n_temporal() + static_cast<std::size_t>(tau);
  }
};

/// One class per distinct inter-site distance (merged within `tol` meters).
LagClasses exact_lag_classes(std::span<const Site> sites, int max_tau, double tol = 1e-6);

/// A zero-distance class plus `n_bins` equal-count bins over the observed
/// positive pairwise distances.
LagClasses equal_count_lag_classes(std::span<const Site> sites, int n_bins, int max_tau);

struct LagCount {
  std::size_t spatial_class = 0;
  int tau = 0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double distance_sum = 0.0;  // sum of |s - s0| over trials

  double mean_distance() const { return trials > 0 ? distance_sum / static_cast<double>(trials) : 0.0; }
};

/// Per lag class totals K and N, indexed by LagClasses::index.
struct JointExceedanceTable {
  LagClasses classes;
  std::vector<LagCount> cells;

  const LagCount& at(std::size_t spatial_class, int tau) const {
    return cells[classes.index(spatial_class, tau)];
  }
};

struct CountOptions {
  bool include_conditioning = false;
};

/// Missing observations are excluded from trials.
JointExceedanceTable count_joint_exceedances(const EpisodeCatalog& catalog, double u,
                                             const LagClasses& classes,
                                             const CountOptions& opt = {});

/// Joint-exceedance counts used to pick q: per site pair (spatial) and per
/// temporal lag (same site, X_t > u and X_{t+tau} > u).
struct ExceedanceProfileRow {
  double q = 0.0;
  double u = 0.0;
  bool spatial = true;
  double lag = 0.0;  // meters (spatial) or steps (temporal)
  std::size_t site_a = 0;
  std::size_t site_b = 0;
  std::int64_t pairs = 0;  // both observed
  std::int64_t joint = 0;  // both above u
};

std::vector<ExceedanceProfileRow> exceedance_count_profile(const SpaceTimeData& data, double u,
                                                           int max_tau, double q = 0.0);
std::vector<ExceedanceProfileRow> exceedance_count_profile(const SpaceTimeData& data,
                                                           std::span<const double> q_list, int max_tau,
                                                           const QuantileOptions& opt = {});

struct TradeoffRow {
  int delta = 0;
  double min_separation = 0.0;
  std::size_t n_episodes = 0;
};

std::vector<TradeoffRow> episode_tradeoff(const SpaceTimeData& data, double u,
                                          std::span<const int> delta_grid,
                                          std::span<const double> dmin_grid);

}  // namespace stormgen
