#include "stormgen/data.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace stormgen {

SpaceTimeData::SpaceTimeData(std::vector<Site> sites, std::size_t n_steps, std::int64_t start_time,
                             std::int64_t step_seconds)
    : sites_(std::move(sites)),
      n_steps_(n_steps),
      start_time_(start_time),
      step_seconds_(step_seconds),
      values_(n_steps * sites_.size(), kMissing) {
  if (step_seconds <= 0) throw std::invalid_argument("step length must be positive");
}

std::vector<double> SpaceTimeData::site_series(std::size_t s) const {
  std::vector<double> out(n_steps_);
  for (std::size_t t = 0; t < n_steps_; ++t) out[t] = at(t, s);
  return out;
}

std::vector<Site> GridGeometry::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back({std::to_string(i), center(i)});
  return out;
}

GriddedField make_gridded_field(const GridGeometry& grid, std::size_t n_steps, std::int64_t start_time,
                                std::int64_t step_seconds) {
  if (grid.nx == 0 || grid.ny == 0 || !(grid.pixel > 0.0)) throw std::invalid_argument("invalid grid geometry");
  return {grid, SpaceTimeData(grid.sites(), n_steps, start_time, step_seconds)};
}

int month_key(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_days day = floor<days>(sys_seconds{seconds{unix_seconds}});
  const year_month_day ymd{day};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_int(s, 5, 2, mo) || s[7] != '-' ||
      !read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    if (!read_int(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' || !read_int(s, pos + 4, 2, mi)) {
      return std::nullopt;
    }
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, sec)) return std::nullopt;
      pos += 3;
    }
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  if (pos != s.size()) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
  return tp.time_since_epoch().count();
}

std::string format_iso8601(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const sys_days day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace stormgen
