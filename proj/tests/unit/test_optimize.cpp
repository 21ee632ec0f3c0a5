#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/optimize.hpp"

using namespace stormgen;

TEST_SUITE("optimize") {
  TEST_CASE("Nelder-Mead finds the Rosenbrock minimum") {
    auto rosen = [](std::span<const double> x) {
      return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const auto r = nelder_mead(rosen, {-1.2, 1.0});
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  }

  TEST_CASE("Nelder-Mead minimizes random convex quadratics (property)") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.5, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t d = 2 + trial % 4;
      std::vector<double> c(d), a(d);
      for (std::size_t i = 0; i < d; ++i) {
        c[i] = u(rng);
        a[i] = w(rng);
      }
      auto f = [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += a[i] * (x[i] - c[i]) * (x[i] - c[i]);
        return s;
      };
      const auto r = nelder_mead(f, std::vector<double>(d, 0.0));
      for (std::size_t i = 0; i < d; ++i) CHECK(r.x[i] == doctest::Approx(c[i]).epsilon(1e-3));
    }
  }

  TEST_CASE("non-finite objective values act as barriers") {
    auto f = [](std::span<const double> x) {
      if (x[0] <= 0.0) return std::nan("");
      return x[0] - std::log(x[0]);
    };
    const auto r = nelder_mead(f, {3.0});
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  }

  TEST_CASE("nelder-mead is deterministic") {
    auto f = [](std::span<const double> x) { return std::cos(3 * x[0]) + x[0] * x[0] + std::pow(x[1] - 1, 2); };
    const auto a = nelder_mead(f, {0.7, 0.0});
    const auto b = nelder_mead(f, {0.7, 0.0});
    CHECK(a.x == b.x);
    CHECK(a.evaluations == b.evaluations);
  }

  TEST_CASE("central-difference gradient matches the analytic gradient") {
    auto f = [](std::span<const double> x) { return std::sin(x[0]) * std::exp(x[1]); };
    const std::vector<double> x{0.4, -0.3};
    const auto g = numeric_gradient(f, x, 1e-5);
    CHECK(g[0] == doctest::Approx(std::cos(0.4) * std::exp(-0.3)).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(std::sin(0.4) * std::exp(-0.3)).epsilon(1e-8));
  }

  TEST_CASE("BFGS solves a smooth problem") {
    auto f = [](std::span<const double> x) {
      return std::pow(x[0] - 2.0, 2) + 3.0 * std::pow(x[1] + 1.0, 2) + 0.5 * x[0] * x[1];
    };
    const auto r = bfgs(f, {0.0, 0.0});
    // Stationarity: 2(x0-2) + 0.5 x1 = 0, 6(x1+1) + 0.5 x0 = 0.
    const double x1 = -7.0 / 5.875;
    const double x0 = 2.0 - 0.25 * x1;
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(x0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(x1).epsilon(1e-5));
  }
}
