#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/advection.hpp"
#include "stormgen/errors.hpp"

using namespace stormgen;

namespace {

// Field of integer intensities summing to 16 (a power of two), shifted by
// (dx, dy) pixels per step, so every barycenter is exact in floating point.
GriddedField translated_blob(int dx, int dy, std::size_t n_steps) {
  const GridGeometry grid{16, 16, 0.0, 0.0, 100.0};
  GriddedField f = make_gridded_field(grid, n_steps, 0, 3600);
  const int blob[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
  for (std::size_t t = 0; t < n_steps; ++t) {
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) {
        const int ix = (dx < 0 ? 11 : 2) + i + dx * static_cast<int>(t);
        const int iy = (dy < 0 ? 11 : 2) + j + dy * static_cast<int>(t);
        f.data.at(t, static_cast<std::size_t>(iy) * 16 + static_cast<std::size_t>(ix)) = blob[j][i];
      }
    }
  }
  return f;
}

}  // namespace

TEST_SUITE("advection") {
  TEST_CASE("barycenter is the intensity-weighted mean position") {
    const std::vector<Site> sites{{"a", {0, 0}}, {"b", {10, 0}}, {"c", {0, 10}}, {"d", {5, 5}}};
    const std::vector<double> v{1.0, 3.0, 0.0, kMissing};
    const auto b = barycenter(v, sites);
    REQUIRE(b);
    CHECK(b->x == doctest::Approx(7.5));
    CHECK(b->y == doctest::Approx(0.0));
    const std::vector<double> dry{0.0, 0.0, kMissing, 0.0};
    CHECK_FALSE(barycenter(dry, sites).has_value());
  }

  TEST_CASE("a translated field yields its translation speed exactly") {
    for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {1, 1}, {1, -1}}) {
      const auto f = translated_blob(dx, dy, 10);
      const auto v = estimate_velocity(f.data, 0, 9);
      CHECK(v.v.x == 100.0 * dx);
      CHECK(v.v.y == 100.0 * dy);
      CHECK(v.n_displacements == 9);
    }
  }

  TEST_CASE("velocity equals a brute-force barycenter tracker (property)") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const GridGeometry grid{16, 16, -750.0, 250.0, 100.0};
      auto f = make_gridded_field(grid, 10, 0, 3600);
      for (double& x : f.data.values()) {
        const double r = unif(rng);
        x = r < 0.05 ? kMissing : r < 0.6 ? 0.0 : std::round(unif(rng) * 100.0) / 10.0;
      }
      // Occasionally dry a whole slice to exercise skipped pairs.
      if (trial % 3 == 0) {
        const std::size_t t = static_cast<std::size_t>(trial) % 10;
        for (std::size_t s = 0; s < 256; ++s) f.data.at(t, s) = 0.0;
      }
      std::vector<std::optional<Vec2>> bary(10);
      for (std::size_t t = 0; t < 10; ++t) {
        double w = 0, sx = 0, sy = 0;
        for (std::size_t s = 0; s < 256; ++s) {
          const double x = f.data.at(t, s);
          if (std::isnan(x) || x <= 0.0) continue;
          const Vec2 c = grid.center(s);
          w += x;
          sx += x * c.x;
          sy += x * c.y;
        }
        if (w > 0.0) bary[t] = Vec2{sx / w, sy / w};
      }
      Vec2 sum;
      int n = 0;
      for (std::size_t t = 1; t < 10; ++t) {
        if (bary[t] && bary[t - 1]) {
          sum = sum + (*bary[t] - *bary[t - 1]);
          ++n;
        }
      }
      const auto v = estimate_velocity(f.data, 0, 9);
      CHECK(v.n_displacements == n);
      CHECK(v.v.x == (1.0 / n) * sum.x);
      CHECK(v.v.y == (1.0 / n) * sum.y);
    }
  }

  TEST_CASE("no usable displacement raises NoVelocityError") {
    auto f = translated_blob(1, 0, 4);
    for (std::size_t s = 0; s < 256; ++s) {
      f.data.at(1, s) = 0.0;
      f.data.at(3, s) = 0.0;
    }
    CHECK_THROWS_AS(estimate_velocity(f.data, 0, 3), NoVelocityError);
  }

  TEST_CASE("matching picks the gridded episode nearest to the fine start") {
    EpisodeCatalog g;
    g.start_time = 0;
    g.step_seconds = 3600;
    for (std::int64_t t0 : {1, 3, 5, 9}) g.episodes.push_back(Episode{.t0 = t0});
    // fine episode [3h + 30min, 4h + 30min], pad 2h -> candidates at 3h and 5h
    CHECK(match_gridded_episode(12600, 16200, g, 7200) == 1);
    CHECK(match_gridded_episode(14400, 16200, g, 7200) == 1);  // tie 3h/5h -> earlier
    CHECK(match_gridded_episode(40000, 40100, g, 100) == -1);
  }

  TEST_CASE("matched velocities are rescaled to the fine time step") {
    auto f = translated_blob(1, 0, 12);
    EpisodeConfig gc;
    gc.delta = 12;
    gc.min_separation = 1e9;
    auto gcat = select_episodes(f.data, 3.0, gc);
    REQUIRE(gcat.episodes.size() == 1);

    SpaceTimeData fine({{"g1", {250, 250}}, {"g2", {400, 250}}}, 120, 0, 300);
    for (std::size_t t = 0; t < 120; ++t) fine.at(t, 0) = t == 5 ? 9.0 : 0.0;
    EpisodeConfig fc;
    fc.delta = 12;
    auto fcat = select_episodes(fine, 1.0, fc);
    REQUIRE(fcat.episodes.size() == 1);
    const auto rep = match_and_assign(fcat, fine, &gcat, &f.data);
    CHECK(rep.n_gridded == 1);
    REQUIRE(fcat.episodes[0].v_emp);
    CHECK(fcat.episodes[0].v_emp->x == doctest::Approx(100.0 * 300.0 / 3600.0));
    CHECK(fcat.episodes[0].source == VelocitySource::gridded);
  }

  TEST_CASE("speed filter keeps slow episodes and those without velocity") {
    EpisodeCatalog c;
    c.episodes.resize(4);
    c.episodes[0].v_emp = Velocity{1, 0};
    c.episodes[1].v_emp = Velocity{3, 4};
    c.episodes[2].v_emp = Velocity{0, 2};
    const auto r = filter_speed_range(c, 2.5);
    CHECK(r.n_before == 4);
    CHECK(r.n_after == 3);
    CHECK(r.fraction_removed() == doctest::Approx(0.25));
  }
}
