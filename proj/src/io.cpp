#include "stormgen/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "stormgen/errors.hpp"

namespace stormgen::io {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line, long line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field", line_no);
  fields.push_back(trim(cur));
  return fields;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Integer step index or ISO-8601 timestamp.
std::int64_t parse_time(const std::string& field, std::int64_t step_seconds, long line) {
  if (auto t = parse_iso8601(field)) return *t;
  std::int64_t step = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), step);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw DataError("invalid timestamp '" + field + "'", line);
  }
  return step * step_seconds;
}

struct TimeAxis {
  std::int64_t start = 0;
  std::size_t n_steps = 0;
};

TimeAxis infer_axis(const std::vector<std::int64_t>& times, std::int64_t step_seconds,
                    const std::vector<long>& lines) {
  if (times.empty()) throw DataError("no observation rows");
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if ((times[i] - *lo) % step_seconds != 0) {
      throw DataError("timestamp not aligned to the " + std::to_string(step_seconds) + " s step", lines[i]);
    }
  }
  return {*lo, static_cast<std::size_t>((*hi - *lo) / step_seconds) + 1};
}

void write_header(std::ostream& out, const GriddedField& f, std::uint64_t nt) {
  const char magic[4] = {'S', 'G', 'R', 'D'};
  out.write(magic, 4);
  auto put = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put(std::uint32_t{1});
  put(static_cast<std::uint64_t>(f.grid.nx));
  put(static_cast<std::uint64_t>(f.grid.ny));
  put(nt);
  put(f.grid.x0);
  put(f.grid.y0);
  put(f.grid.pixel);
  put(static_cast<std::int64_t>(f.data.start_time()));
  put(static_cast<std::int64_t>(f.data.step_seconds()));
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing column '" + name + "'", 1);
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    auto fields = split_row(line, line_no);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError("expected " + std::to_string(t.header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      line_no);
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw DataError("empty CSV file");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

double parse_value(const std::string& field, long line) {
  if (field.empty() || field == "NA" || field == "NaN" || field == "nan") return kMissing;
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw DataError("invalid number '" + field + "'", line);
  }
  return v;
}

std::vector<Site> read_sites(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const std::size_t ci = t.column("site_id"), cx = t.column("x_m"), cy = t.column("y_m");
  std::vector<Site> sites;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long ln = t.line_numbers[r];
    Site s{t.rows[r][ci], {parse_value(t.rows[r][cx], ln), parse_value(t.rows[r][cy], ln)}};
    if (s.id.empty()) throw DataError(path + ": empty site id", ln);
    if (std::isnan(s.pos.x) || std::isnan(s.pos.y)) throw DataError(path + ": missing coordinate", ln);
    if (!seen.insert(s.id).second) throw DataError(path + ": duplicate site id '" + s.id + "'", ln);
    sites.push_back(std::move(s));
  }
  if (sites.empty()) throw DataError(path + ": no sites");
  return sites;
}

SpaceTimeData read_gauge_csv(const std::string& path, const std::vector<Site>& sites, std::int64_t step_seconds) {
  if (step_seconds <= 0) throw ConfigError("step length must be positive");
  const CsvTable t = read_csv_file(path);
  const std::size_t ct = t.column("timestamp"), cs = t.column("site_id"), cv = t.column("value_mm");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < sites.size(); ++s) index[sites[s].id] = s;

  std::vector<std::int64_t> times(t.rows.size());
  std::vector<std::size_t> site_of(t.rows.size());
  std::vector<double> values(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long ln = t.line_numbers[r];
    try {
      times[r] = parse_time(t.rows[r][ct], step_seconds, ln);
      auto it = index.find(t.rows[r][cs]);
      if (it == index.end()) throw DataError("unknown site id '" + t.rows[r][cs] + "'", ln);
      site_of[r] = it->second;
      values[r] = parse_value(t.rows[r][cv], ln);
      if (values[r] < 0.0) throw DataError("negative rainfall value", ln);
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  if (t.rows.empty()) throw DataError(path + ": no observation rows");
  const TimeAxis axis = infer_axis(times, step_seconds, t.line_numbers);
  SpaceTimeData data(sites, axis.n_steps, axis.start, step_seconds);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    data.at(static_cast<std::size_t>((times[r] - axis.start) / step_seconds), site_of[r]) = values[r];
  }
  return data;
}

GriddedField read_gridded_csv(const std::string& path, std::int64_t step_seconds) {
  if (step_seconds <= 0) throw ConfigError("step length must be positive");
  const CsvTable t = read_csv_file(path);
  const std::size_t ct = t.column("timestamp"), cx = t.column("x_m"), cy = t.column("y_m"),
                    cv = t.column("value_mm");
  if (t.rows.empty()) throw DataError(path + ": no observation rows");
  const std::size_t n = t.rows.size();
  std::vector<std::int64_t> times(n);
  std::vector<double> xs(n), ys(n), vs(n);
  for (std::size_t r = 0; r < n; ++r) {
    const long ln = t.line_numbers[r];
    try {
      times[r] = parse_time(t.rows[r][ct], step_seconds, ln);
      xs[r] = parse_value(t.rows[r][cx], ln);
      ys[r] = parse_value(t.rows[r][cy], ln);
      vs[r] = parse_value(t.rows[r][cv], ln);
      if (std::isnan(xs[r]) || std::isnan(ys[r])) throw DataError("missing pixel coordinate", ln);
      if (vs[r] < 0.0) throw DataError("negative rainfall value", ln);
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
  }

  auto axis_of = [&](const std::vector<double>& c, double& origin, double& step) {
    std::vector<double> u(c);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    origin = u.front();
    step = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) {
      const double d = u[i] - u[i - 1];
      if (step == 0.0 || d < step) step = d;
    }
    return u.size();
  };
  GridGeometry g;
  double px = 0.0, py = 0.0;
  const std::size_t ux = axis_of(xs, g.x0, px), uy = axis_of(ys, g.y0, py);
  if (ux > 1 && uy > 1 && std::abs(px - py) > 1e-6 * std::max(px, py)) {
    throw DataError(path + ": pixels are not square (" + fmt(px) + " vs " + fmt(py) + " m)");
  }
  g.pixel = ux > 1 ? px : (uy > 1 ? py : 1.0);
  auto cell = [&](double c, double origin, long ln) {
    const double k = (c - origin) / g.pixel;
    const double kr = std::round(k);
    if (std::abs(k - kr) > 1e-6) throw DataError(path + ": coordinate off the regular grid", ln);
    return static_cast<std::size_t>(kr);
  };
  std::size_t max_ix = 0, max_iy = 0;
  std::vector<std::size_t> ix(n), iy(n);
  for (std::size_t r = 0; r < n; ++r) {
    ix[r] = cell(xs[r], g.x0, t.line_numbers[r]);
    iy[r] = cell(ys[r], g.y0, t.line_numbers[r]);
    max_ix = std::max(max_ix, ix[r]);
    max_iy = std::max(max_iy, iy[r]);
  }
  g.nx = max_ix + 1;
  g.ny = max_iy + 1;
  const TimeAxis axis = infer_axis(times, step_seconds, t.line_numbers);
  GriddedField f = make_gridded_field(g, axis.n_steps, axis.start, step_seconds);
  for (std::size_t r = 0; r < n; ++r) {
    f.data.at(static_cast<std::size_t>((times[r] - axis.start) / step_seconds), iy[r] * g.nx + ix[r]) = vs[r];
  }
  return f;
}

void write_gridded_csv(const std::string& path, const GriddedField& field) {
  auto out = open_out(path);
  out << "timestamp,x_m,y_m,value_mm\n";
  for (std::size_t t = 0; t < field.data.n_steps(); ++t) {
    const std::string ts = format_iso8601(field.data.time_of(static_cast<std::int64_t>(t)));
    for (std::size_t i = 0; i < field.grid.size(); ++i) {
      const Vec2 c = field.grid.center(i);
      out << ts << ',' << fmt(c.x) << ',' << fmt(c.y) << ',' << fmt(field.data.at(t, i)) << '\n';
    }
  }
}

GriddedField read_gridded_binary(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "binary grid format assumes little-endian");
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SGRD", 4) != 0) throw DataError(path + ": not a gridded binary file");
  auto get = [&](auto& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(path + ": truncated header");
  };
  std::uint32_t version = 0;
  std::uint64_t nx = 0, ny = 0, nt = 0;
  GridGeometry g;
  std::int64_t start = 0, step = 0;
  get(version);
  if (version != 1) throw DataError(path + ": unsupported version " + std::to_string(version));
  get(nx);
  get(ny);
  get(nt);
  get(g.x0);
  get(g.y0);
  get(g.pixel);
  get(start);
  get(step);
  if (nx == 0 || ny == 0 || !(g.pixel > 0.0) || step <= 0) throw DataError(path + ": invalid grid header");
  g.nx = nx;
  g.ny = ny;
  GriddedField f = make_gridded_field(g, nt, start, step);
  auto values = f.data.values();
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw DataError(path + ": truncated data block");
  }
  return f;
}

void write_gridded_binary(const std::string& path, const GriddedField& field) {
  auto out = open_out(path, std::ios::binary);
  write_header(out, field, field.data.n_steps());
  auto values = field.data.values();
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void write_key_values(const std::string& path, const std::vector<KeyValueEntry>& entries,
                      const std::string& comment) {
  auto out = open_out(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& e : entries) {
    out << e.name << ' ' << fmt(e.value);
    if (e.std_error) out << ' ' << fmt(*e.std_error);
    out << '\n';
  }
}

std::map<std::string, KeyValueEntry> read_key_values(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, KeyValueEntry> out;
  std::string line;
  long ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::istringstream fields(s);
    std::string name, value, se, extra;
    fields >> name >> value >> se >> extra;
    if (value.empty() || !extra.empty()) throw DataError(path + ": expected 'name value [std_error]'", ln);
    KeyValueEntry e{name, parse_value(value, ln), std::nullopt};
    if (!se.empty()) e.std_error = parse_value(se, ln);
    out[name] = e;
  }
  return out;
}

void write_episode_catalog(const std::string& path, const EpisodeCatalog& catalog) {
  auto out = open_out(path);
  out << "episode_id,site_id_or_pixel,t0,delta,vx,vy,n_exceedances\n";
  for (const Episode& e : catalog.episodes) {
    out << e.id << ',' << catalog.sites[e.site].id << ',' << format_iso8601(catalog.time_of(e.t0)) << ','
        << e.delta << ',';
    if (e.v_emp) out << fmt(e.v_emp->x) << ',' << fmt(e.v_emp->y);
    else out << ',';
    out << ',' << count_exceedances(e, catalog.threshold) << '\n';
  }
}

EpisodeCatalog read_episode_catalog(const std::string& path, const SpaceTimeData& data, double threshold) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cid = t.column("episode_id"), cs = t.column("site_id_or_pixel"), ct = t.column("t0"),
                    cd = t.column("delta"), cvx = t.column("vx"), cvy = t.column("vy");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < data.n_sites(); ++s) index[data.sites()[s].id] = s;

  EpisodeCatalog c;
  c.sites = data.sites();
  c.start_time = data.start_time();
  c.step_seconds = data.step_seconds();
  c.threshold = threshold;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const long ln = t.line_numbers[r];
    try {
      Episode e;
      e.id = static_cast<int>(parse_value(row[cid], ln));
      auto it = index.find(row[cs]);
      if (it == index.end()) throw DataError("unknown site '" + row[cs] + "'", ln);
      e.site = it->second;
      const std::int64_t time = parse_time(row[ct], data.step_seconds(), ln);
      if ((time - data.start_time()) % data.step_seconds() != 0) throw DataError("t0 off the time axis", ln);
      e.t0 = (time - data.start_time()) / data.step_seconds();
      e.delta = static_cast<int>(parse_value(row[cd], ln));
      if (e.delta < 1) throw DataError("episode length must be positive", ln);
      const double vx = parse_value(row[cvx], ln), vy = parse_value(row[cvy], ln);
      if (std::isnan(vx) != std::isnan(vy)) throw DataError("velocity must have both components or none", ln);
      if (!std::isnan(vx)) {
        e.v_emp = Velocity{vx, vy};
        e.source = VelocitySource::gridded;
      }
      c.episodes.push_back(std::move(e));
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  attach_windows(c, data);
  return c;
}

void write_simulation_csv(const std::string& path, const std::vector<GridEpisode>& episodes,
                          const GridGeometry& grid, int n_steps) {
  auto out = open_out(path);
  out << "episode_id,replicate,t,x_m,y_m,rain_mm\n";
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const GridEpisode& e = episodes[k];
    for (int t = 0; t < n_steps; ++t) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec2 c = grid.center(i);
        out << e.id << ',' << 1 << ',' << t << ',' << fmt(c.x) << ',' << fmt(c.y) << ','
            << fmt(e.sim.x[static_cast<std::size_t>(t) * grid.size() + i]) << '\n';
      }
    }
  }
}

}  // namespace stormgen::io
