#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stormgen/data.hpp"
#include "stormgen/episodes.hpp"
#include "stormgen/simulation.hpp"

namespace stormgen::io {

/// Minimal CSV reader: comma separated, optional double quotes, '#' comment
/// lines and blank lines skipped. The first non-comment row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;

  /// Column index by name; throws DataError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Parses a number or an empty field (missing -> NaN). Throws DataError on junk.
double parse_value(const std::string& field, long line);

/// Sites file: `site_id, x_m, y_m`.
std::vector<Site> read_sites(const std::string& path);

/// Gauge file `timestamp, site_id, value_mm`. Timestamps are ISO-8601 or
/// integer steps (step i -> i * step_seconds). Unlisted (time, site) cells and
/// empty values are missing. Negative values are rejected.
SpaceTimeData read_gauge_csv(const std::string& path, const std::vector<Site>& sites,
                             std::int64_t step_seconds);

/// Gridded file `timestamp, x_m, y_m, value_mm`; the pixel grid is inferred
/// and checked for regularity.
GriddedField read_gridded_csv(const std::string& path, std::int64_t step_seconds);
void write_gridded_csv(const std::string& path, const GriddedField& field);

/// Dense binary layout: magic "SGRD", u32 version, u64 nx, ny, nt, f64 x0, y0,
/// pixel, i64 start_time, step_seconds, then nt * ny * nx little-endian f64
/// values (time-major, then row-major pixels), NaN for missing.
GriddedField read_gridded_binary(const std::string& path);
void write_gridded_binary(const std::string& path, const GriddedField& field);

/// Flat key-value document: one `name value [std_error]` per line, '#' comments.
struct KeyValueEntry {
  std::string name;
  double value = 0.0;
  std::optional<double> std_error;
};
void write_key_values(const std::string& path, const std::vector<KeyValueEntry>& entries,
                      const std::string& comment = {});
std::map<std::string, KeyValueEntry> read_key_values(const std::string& path);

/// Episode catalog CSV: `episode_id, site_id_or_pixel, t0, delta, vx, vy, n_exceedances`.
/// t0 is written as ISO-8601; vx, vy (meters per step) are empty when unknown.
void write_episode_catalog(const std::string& path, const EpisodeCatalog& catalog);
/// Reads a catalog written by write_episode_catalog against the given data
/// (for site lookup and the time axis); windows are attached.
EpisodeCatalog read_episode_catalog(const std::string& path, const SpaceTimeData& data, double threshold);

/// Simulation output CSV: `episode_id, replicate, t, x_m, y_m, rain_mm`.
void write_simulation_csv(const std::string& path, const std::vector<GridEpisode>& episodes,
                          const GridGeometry& grid, int n_steps);

}  // namespace stormgen::io
