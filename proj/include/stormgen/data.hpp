#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stormgen/geometry.hpp"

namespace stormgen {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

struct Site {
  std::string id;
  Vec2 pos;  // meters
};

/// Space-time observations on a regular time axis. Values are stored
/// time-major (values[t * n_sites + s]); NaN marks a missing value.
class SpaceTimeData {
 public:
  SpaceTimeData() = default;
  SpaceTimeData(std::vector<Site> sites, std::size_t n_steps, std::int64_t start_time = 0,
                std::int64_t step_seconds = 1);

  std::size_t n_sites() const { return sites_.size(); }
  std::size_t n_steps() const { return n_steps_; }
  const std::vector<Site>& sites() const { return sites_; }

  std::int64_t start_time() const { return start_time_; }
  std::int64_t step_seconds() const { return step_seconds_; }
  /// Timestamp (seconds since the Unix epoch) of step t.
  std::int64_t time_of(std::int64_t t) const { return start_time_ + t * step_seconds_; }

  double& at(std::size_t t, std::size_t s) { return values_[t * sites_.size() + s]; }
  double at(std::size_t t, std::size_t s) const { return values_[t * sites_.size() + s]; }
  std::span<const double> slice(std::size_t t) const {
    return {values_.data() + t * sites_.size(), sites_.size()};
  }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Per-site series, for marginal fitting.
  std::vector<double> site_series(std::size_t s) const;

 private:
  std::vector<Site> sites_;
  std::size_t n_steps_ = 0;
  std::int64_t start_time_ = 0;
  std::int64_t step_seconds_ = 1;
  std::vector<double> values_;
};

/// Regular pixel grid. Pixel (ix, iy) is centered at (x0 + ix * pixel, y0 + iy * pixel)
/// and has linear index iy * nx + ix.
struct GridGeometry {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double pixel = 1.0;

  std::size_t size() const { return nx * ny; }
  Vec2 center(std::size_t index) const {
    return {x0 + static_cast<double>(index % nx) * pixel, y0 + static_cast<double>(index / nx) * pixel};
  }
  std::vector<Site> sites() const;
};

/// Gridded rainfall; sites are the pixels in linear-index order.
struct GriddedField {
  GridGeometry grid;
  SpaceTimeData data;
};

GriddedField make_gridded_field(const GridGeometry& grid, std::size_t n_steps,
                                std::int64_t start_time = 0, std::int64_t step_seconds = 1);

/// Calendar month key (year * 12 + month - 1) of a Unix timestamp.
int month_key(std::int64_t unix_seconds);

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" (space separator and a
/// trailing 'Z' accepted). Returns std::nullopt if the text is not ISO-8601.
std::optional<std::int64_t> parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t unix_seconds);

}  // namespace stormgen
