#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/normal.hpp"
#include "stormgen/stats.hpp"

using namespace stormgen;

namespace {

// Simpson's rule on the standard normal density, independent of erfc.
double normal_cdf_by_quadrature(double x) {
  const double lo = -12.0;
  const int n = 20000;
  const double h = (x - lo) / n;
  auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
  double s = phi(lo) + phi(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * phi(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("normal") {
  TEST_CASE("cdf matches quadrature") {
    for (double x : {-4.0, -1.5, -0.2, 0.0, 0.7, 2.0, 3.5}) {
      CHECK(normal_cdf(x) == doctest::Approx(normal_cdf_by_quadrature(x)).epsilon(1e-9));
    }
  }

  TEST_CASE("sf is 1 - cdf and stays accurate far in the tail") {
    CHECK(normal_sf(0.3) == doctest::Approx(1.0 - normal_cdf(0.3)));
    // Mills ratio asymptotics: sf(x) ~ phi(x)/x (1 - 1/x^2 + 3/x^4)
    const double x = 12.0;
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double approx = phi / x * (1.0 - 1.0 / (x * x) + 3.0 / std::pow(x, 4) - 15.0 / std::pow(x, 6));
    CHECK(normal_sf(x) == doctest::Approx(approx).epsilon(1e-6));
  }

  TEST_CASE("quantile inverts the cdf (property)") {
    std::mt19937_64 rng(7);
    // Below zero the cdf keeps full relative precision.
    std::uniform_real_distribution<double> unif(-8.0, 0.0);
    for (int i = 0; i < 500; ++i) {
      const double x = unif(rng);
      const double p = normal_cdf(x);
      if (p <= 0.0 || p >= 1.0) continue;
      CHECK(normal_quantile(p) == doctest::Approx(x).epsilon(1e-8));
    }
    for (int i = 0; i < 500; ++i) {
      const double p = std::uniform_real_distribution<double>(1e-6, 1.0 - 1e-6)(rng);
      CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-12);
    }
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054));
  }

  TEST_CASE("quantile is infinite at the endpoints and rejects other probabilities") {
    CHECK(normal_quantile(0.0) == -INFINITY);
    CHECK(normal_quantile(1.0) == INFINITY);
    CHECK_THROWS_AS(normal_quantile(1.5), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(-0.1), std::domain_error);
  }

  TEST_CASE("empirical quantile follows the inverse ECDF") {
    const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0};
    CHECK(sorted_quantile(sorted, 0.25) == 1.0);
    CHECK(sorted_quantile(sorted, 0.26) == 2.0);
    CHECK(sorted_quantile(sorted, 1.0) == 4.0);
    const std::vector<double> messy{4.0, NAN, 1.0, 3.0, 2.0};
    CHECK(empirical_quantile(messy, 0.5) == 2.0);
    const std::vector<double> empty{NAN};
    CHECK_THROWS(empirical_quantile(empty, 0.5));
  }

  TEST_CASE("empirical quantile is the smallest value with ECDF >= q (property)") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(1, 40);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(size(rng));
      for (double& x : v) x = std::round(unif(rng) * 10.0);
      const double q = std::max(1e-9, unif(rng));
      const double got = empirical_quantile(v, q);
      std::size_t at_or_below = 0, below = 0;
      for (double x : v) {
        at_or_below += x <= got;
        below += x < got;
      }
      const double n = static_cast<double>(v.size());
      CHECK(at_or_below / n >= q - 1e-12);
      CHECK(below / n < q);
    }
  }
}
