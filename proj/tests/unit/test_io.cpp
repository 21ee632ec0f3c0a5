#include <cmath>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "stormgen/errors.hpp"
#include "stormgen/io.hpp"

using namespace stormgen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("stormgen-io-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    const auto p = (path / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }
};

bool same_values(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("CSV reader handles quotes, comments and blank lines") {
    std::istringstream in("# note\na,b\n\n\"x,1\",2\n3,\"\"\n");
    const auto t = io::read_csv(in);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "x,1");
    CHECK(t.rows[1][1].empty());
    CHECK(t.line_numbers[1] == 5);
    CHECK_THROWS_AS(t.column("c"), DataError);
  }

  TEST_CASE("field count mismatches report the line") {
    std::istringstream in("a,b\n1,2\n3\n");
    try {
      io::read_csv(in);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("values: empty and NA are missing, junk is an error") {
    CHECK(std::isnan(io::parse_value("", 1)));
    CHECK(std::isnan(io::parse_value("NA", 1)));
    CHECK(io::parse_value("0.2153", 1) == 0.2153);
    CHECK_THROWS_AS(io::parse_value("1.2x", 4), DataError);
  }

  TEST_CASE("gauge files: ISO timestamps, gaps and negative values") {
    TempDir dir;
    const auto sites_path = dir.file("sites.csv", "site_id,x_m,y_m\nA,0,0\nB,100,0\n");
    const auto sites = io::read_sites(sites_path);
    REQUIRE(sites.size() == 2);
    const auto g = dir.file("g.csv",
                            "timestamp,site_id,value_mm\n"
                            "2020-08-15T00:00:00,A,0.2153\n"
                            "2020-08-15T00:10:00,B,1.5\n"
                            "2020-08-15T00:05:00,A,\n");
    const auto d = io::read_gauge_csv(g, sites, 300);
    CHECK(d.n_steps() == 3);
    CHECK(d.start_time() == *parse_iso8601("2020-08-15T00:00:00"));
    CHECK(d.at(0, 0) == 0.2153);
    CHECK(std::isnan(d.at(1, 0)));
    CHECK(std::isnan(d.at(0, 1)));
    CHECK(d.at(2, 1) == 1.5);

    const auto bad = dir.file("bad.csv", "timestamp,site_id,value_mm\n2020-08-15T00:00:00,A,-1\n");
    CHECK_THROWS_AS(io::read_gauge_csv(bad, sites, 300), DataError);
    const auto unknown = dir.file("unk.csv", "timestamp,site_id,value_mm\n2020-08-15T00:00:00,Z,1\n");
    CHECK_THROWS_AS(io::read_gauge_csv(unknown, sites, 300), DataError);
    const auto dup = dir.file("dup.csv", "site_id,x_m,y_m\nA,0,0\nA,1,1\n");
    CHECK_THROWS_AS(io::read_sites(dup), DataError);
  }

  TEST_CASE("gridded CSV and binary round-trip (property)") {
    TempDir dir;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const GridGeometry grid{3 + static_cast<std::size_t>(trial), 2 + static_cast<std::size_t>(trial % 3), -750.0,
                              1250.0, 1000.0};
      auto f = make_gridded_field(grid, 4, 1597449600, 3600);
      for (double& v : f.data.values()) v = unif(rng) < 0.1 ? kMissing : std::round(unif(rng) * 100) / 10;
      const auto csv = dir.file("g" + std::to_string(trial) + ".csv");
      io::write_gridded_csv(csv, f);
      const auto back = io::read_gridded_csv(csv, 3600);
      CHECK(back.grid.nx == grid.nx);
      CHECK(back.grid.ny == grid.ny);
      CHECK(back.grid.x0 == grid.x0);
      CHECK(back.grid.pixel == grid.pixel);
      CHECK(back.data.start_time() == 1597449600);
      CHECK(same_values(back.data.values(), f.data.values()));

      const auto bin = dir.file("g" + std::to_string(trial) + ".sgrd");
      io::write_gridded_binary(bin, f);
      const auto b2 = io::read_gridded_binary(bin);
      CHECK(b2.grid.nx == grid.nx);
      CHECK(b2.data.step_seconds() == 3600);
      CHECK(same_values(b2.data.values(), f.data.values()));
    }
    const auto junk = dir.file("junk.sgrd", "not a grid");
    CHECK_THROWS_AS(io::read_gridded_binary(junk), DataError);
  }

  TEST_CASE("key-value documents round-trip exactly") {
    TempDir dir;
    const auto p = dir.file("kv.txt");
    io::write_key_values(p, {{"xi", 0.262, 0.01}, {"p0", 0.98912345678901234, std::nullopt}}, "margins");
    const auto kv = io::read_key_values(p);
    CHECK(kv.at("xi").value == 0.262);
    CHECK(kv.at("xi").std_error == 0.01);
    CHECK(kv.at("p0").value == 0.98912345678901234);
    CHECK_FALSE(kv.at("p0").std_error.has_value());
  }

  TEST_CASE("episode catalogs round-trip") {
    TempDir dir;
    SpaceTimeData d({{"A", {0, 0}}, {"B", {500, 0}}}, 50, 1597449600, 300);
    for (std::size_t t = 0; t < 50; ++t) {
      d.at(t, 0) = t % 7 == 0 ? 3.0 : 0.0;
      d.at(t, 1) = t % 11 == 0 ? 2.0 : 0.0;
    }
    EpisodeConfig cfg;
    cfg.delta = 5;
    cfg.min_separation = 1000.0;
    auto cat = select_episodes(d, 1.0, cfg);
    REQUIRE(cat.episodes.size() > 2);
    cat.episodes[1].v_emp = Velocity{12.5, -3.25};
    cat.episodes[1].source = VelocitySource::gridded;
    const auto p = dir.file("episodes.csv");
    io::write_episode_catalog(p, cat);
    const auto back = io::read_episode_catalog(p, d, 1.0);
    REQUIRE(back.episodes.size() == cat.episodes.size());
    for (std::size_t i = 0; i < cat.episodes.size(); ++i) {
      CHECK(back.episodes[i].id == cat.episodes[i].id);
      CHECK(back.episodes[i].site == cat.episodes[i].site);
      CHECK(back.episodes[i].t0 == cat.episodes[i].t0);
      CHECK(same_values(back.episodes[i].window, cat.episodes[i].window));
      CHECK(back.episodes[i].v_emp.has_value() == cat.episodes[i].v_emp.has_value());
    }
    CHECK(*back.episodes[1].v_emp == Velocity{12.5, -3.25});
  }

  TEST_CASE("ISO-8601 parsing") {
    CHECK(parse_iso8601("1970-01-02") == 86400);
    CHECK(parse_iso8601("2020-08-15 00:05Z") == parse_iso8601("2020-08-15T00:05:00"));
    CHECK_FALSE(parse_iso8601("15/08/2020").has_value());
    CHECK(format_iso8601(*parse_iso8601("2021-03-04T05:06:07")) == "2021-03-04T05:06:07");
    CHECK(month_key(*parse_iso8601("2020-08-31T23:59:59")) == 2020 * 12 + 7);
  }
}
