#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/diagnostics.hpp"

using namespace stormgen;

namespace {

JointExceedanceTable toy_table() {
  JointExceedanceTable t;
  t.classes.spatial = {{0.0, 1e-6}, {1e-6, 150.0}, {150.0, 400.0}};
  t.classes.max_tau = 1;
  t.cells.resize(6);
  const std::int64_t k[6] = {0, 8, 5, 2, 0, 0};
  const std::int64_t n[6] = {0, 10, 10, 10, 10, 0};
  for (std::size_t c = 0; c < 3; ++c) {
    for (int tau = 0; tau <= 1; ++tau) {
      auto& cell = t.cells[t.classes.index(c, tau)];
      cell.spatial_class = c;
      cell.tau = tau;
      cell.successes = k[c * 2 + tau];
      cell.trials = n[c * 2 + tau];
      cell.distance_sum = 100.0 * static_cast<double>(c) * static_cast<double>(cell.trials);
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("empirical extremogram is K / N per class") {
    const auto rows = empirical_extremogram(toy_table());
    REQUIRE(rows.size() == 6);
    CHECK(std::isnan(rows[0].chi));
    CHECK(rows[0].distance == 0.0);
    CHECK(rows[1].chi == 0.8);
    CHECK(rows[2].chi == 0.5);
    CHECK(rows[2].distance == 100.0);
    CHECK(rows[4].chi == 0.0);
  }

  TEST_CASE("empirical variogram inverts chi and drops unusable classes") {
    const auto ext = empirical_extremogram(toy_table());
    const auto vg = empirical_variogram(ext);
    REQUIRE(vg.size() == 3);
    for (std::size_t i = 1; i < vg.size(); ++i) {
      CHECK((vg[i - 1].tau < vg[i].tau || (vg[i - 1].tau == vg[i].tau && vg[i - 1].distance <= vg[i].distance)));
    }
    for (const auto& r : vg) CHECK(chi_from_variogram(r.gamma) == doctest::Approx(r.chi).epsilon(1e-12));
  }

  TEST_CASE("theoretical extremogram evaluates the model at class distances") {
    const auto ext = empirical_extremogram(toy_table());
    const VariogramParams th{0.01, 0.3, 1.0, 1.0};
    const auto model = theoretical_extremogram(ext, th, {0, 0});
    REQUIRE(model.size() == ext.size());
    CHECK(model[3] == doctest::Approx(std::erfc(std::sqrt(2.0 * (0.01 * 100.0 + 0.3)) / 2.0)));
  }

  TEST_CASE("QQ points follow sample and model quantiles") {
    std::mt19937_64 rng(4);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> x(2000);
    for (double& v : x) v = ex(rng);
    const EgpdParams exp_law{0.0, 1.0, 1.0};
    const auto qq = qq_egpd(x, exp_law, 0.0, 50, 1, 20);
    REQUIRE_FALSE(qq.degenerate);
    REQUIRE(qq.rows.size() == 20);
    for (const auto& r : qq.rows) {
      CHECK(r.model == doctest::Approx(-std::log1p(-r.p)).epsilon(1e-6));
      CHECK(r.lower <= r.empirical);
      CHECK(r.empirical <= r.upper);
      if (r.p < 0.9) CHECK(std::abs(r.empirical - r.model) < 0.15 * (1 + r.model));
    }
    const std::vector<double> flat(10, 1.0);
    CHECK(qq_egpd(flat, exp_law, 0.0).degenerate);
    const auto no_boot = qq_egpd(x, exp_law, 0.0, 0, 1, 5);
    CHECK(std::isnan(no_boot.rows[0].lower));
  }

  TEST_CASE("trivariate conditional probabilities by brute force (property)") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t ns = 4, nobs = 60;
      std::vector<double> rows(ns * nobs);
      for (double& v : rows) v = unif(rng) < 0.05 ? NAN : unif(rng);
      const auto t = trivariate_conditional(rows, ns, 0.5, 1);
      for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = 0; b < ns; ++b) {
          long joint = 0, total = 0;
          for (std::size_t r = 0; r < nobs; ++r) {
            const double* x = &rows[r * ns];
            if (!(x[1] > 0.5) || std::isnan(x[a]) || std::isnan(x[b])) continue;
            ++total;
            joint += x[a] > 0.5 && x[b] > 0.5;
          }
          if (total == 0) {
            CHECK(std::isnan(t.at(a, b)));
          } else {
            CHECK(t.at(a, b) == static_cast<double>(joint) / static_cast<double>(total));
          }
        }
      }
      CHECK(t.at(1, 1) == 1.0);
    }
  }

  TEST_CASE("cumulative rain skips missing values") {
    const std::vector<std::vector<double>> eps{{1.0, NAN, 2.5}, {}, {0.0}};
    const auto c = cumulative_rain_distribution(eps);
    CHECK(c == std::vector<double>{3.5, 0.0, 0.0});
  }
}
