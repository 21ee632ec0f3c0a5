#include <cmath>
#include <stdexcept>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "stormgen/errors.hpp"

using namespace stormgen;
using namespace stormgen::cli;

TEST_SUITE("cli") {
  TEST_CASE("defaults survive a YAML round trip") {
    const PipelineConfig c;
    CHECK(parse_config(to_yaml(c)) == c);
  }

  TEST_CASE("edited values survive a YAML round trip") {
    PipelineConfig c;
    c.seed = 7;
    c.margins.censoring_multiplier = 2;
    c.advection.fixed_eta = std::array<double, 2>{0.5, 1.6};
    c.simulation.fixed_velocity_kmh = std::array<double, 2>{1.0, -2.0};
    c.episodes.max_episodes = 300;
    c.inference.init = {1.090, 4.628, 0.225, 0.713, 1.0 / 3.0, 0.1};
    CHECK(parse_config(to_yaml(c)) == c);
  }

  TEST_CASE("unknown keys and bad values are configuration errors") {
    CHECK_THROWS_AS(parse_config("episodes:\n  qq: 0.9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("nonsense: 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("episodes:\n  q: high\n"), ConfigError);
    CHECK_THROWS_AS(validate(parse_config("episodes:\n  q: 1.5\n")), ConfigError);
  }

  TEST_CASE("overrides replace nested values") {
    const auto y = apply_overrides("episodes:\n  q: 0.95\n", {"episodes.q=0.9", "seed=3", "margins.pooling=averaged"});
    const auto c = parse_config(y);
    CHECK(c.episodes.q == 0.9);
    CHECK(c.seed == 3);
    CHECK(c.margins.pooling == "averaged");
    CHECK_THROWS_AS(apply_overrides("", {"missing-equals"}), ConfigError);
  }

  TEST_CASE("relative data paths resolve against the config directory") {
    const auto c = parse_config("data:\n  sites: sites.csv\n  gauges: /abs/g.csv\n", "/tmp/run");
    CHECK(c.data.sites == "/tmp/run/sites.csv");
    CHECK(c.data.gauges == "/abs/g.csv");
  }

  TEST_CASE("published five-minute variogram estimates convert to native units") {
    // km and hours -> meters and 5-minute steps, as reported for the gauge network.
    const Units u{300};
    const auto p = params_to_native({1.090, 4.628, 0.225, 0.713, 1.0, 1.0}, u);
    CHECK(std::abs(p.theta.beta1 - 0.230) < 1e-3);
    CHECK(std::abs(p.theta.beta2 - 0.786) < 2e-3);
    CHECK(p.theta.alpha1 == 0.225);
    CHECK(p.theta.alpha2 == 0.713);
  }

  TEST_CASE("unit conversion round-trips and preserves A(V) (property)") {
    for (std::int64_t step : {300, 600, 3600}) {
      const Units u{step};
      const std::array<double, 6> kmh{0.3, 0.6, 0.3, 0.8, 1.6, 5.2};
      const auto native = params_to_native(kmh, u);
      const auto back = params_to_kmh(native, u);
      for (int k = 0; k < 6; ++k) CHECK(back[k] == doctest::Approx(kmh[k]).epsilon(1e-12));
      for (double speed_kmh : {0.5, 2.0, 4.0}) {
        const double a_kmh = 1.6 * std::pow(speed_kmh, 5.2);
        const auto a_native = transform_advection({u.speed_to_native(speed_kmh), 0.0}, native.adv);
        CHECK(u.speed_to_kmh(a_native.x) == doctest::Approx(a_kmh).epsilon(1e-10));
      }
      // Variogram values agree at the same physical lag.
      const double g_kmh = 2 * (kmh[0] * std::pow(1.5, kmh[2]) + kmh[1] * std::pow(2.0, kmh[3]));
      const double g_native = variogram({1500.0, 0.0}, 2.0 * u.steps_per_hour(), native.theta, {0, 0});
      CHECK(g_native == doctest::Approx(g_kmh).epsilon(1e-12));
    }
  }
}
