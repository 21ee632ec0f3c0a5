#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/inference.hpp"
#include "stormgen/simulation.hpp"

using namespace stormgen;

namespace {

EpisodeCatalog small_catalog(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EpisodeCatalog c;
  for (int i = 0; i < 5; ++i) c.sites.push_back({"s" + std::to_string(i), {100.0 * i, 50.0 * (i % 2)}});
  c.step_seconds = 300;
  c.start_time = 1596240000;  // 2020-08-01
  for (int k = 0; k < 8; ++k) {
    Episode e;
    e.id = k + 1;
    e.site = static_cast<std::size_t>(k % 5);
    e.t0 = 20 * k;
    e.delta = 4;
    if (k != 3) e.v_emp = Velocity{40.0 * unif(rng) - 20.0, 40.0 * unif(rng) - 20.0};
    e.window.resize(4 * 5);
    for (double& x : e.window) x = unif(rng) < 0.1 ? kMissing : 3.0 * unif(rng);
    c.episodes.push_back(e);
  }
  return c;
}

// Direct evaluation of the composite likelihood from the catalog.
double brute_force_loglik(const EpisodeCatalog& c, double u, const ExtendedParams& p, int max_tau) {
  double ll = 0.0;
  for (const Episode& e : c.episodes) {
    if (!e.v_emp) continue;
    const Velocity v = transform_advection(*e.v_emp, p.adv);
    for (int tau = 0; tau <= std::min(max_tau, e.delta - 1); ++tau) {
      for (std::size_t s = 0; s < c.n_sites(); ++s) {
        if (tau == 0 && s == e.site) continue;
        const double x = e.value(tau, s, c.n_sites());
        if (std::isnan(x)) continue;
        const double chi = std::clamp(chi_r(c.sites[s].pos - c.sites[e.site].pos, tau, p.theta, v), 1e-10, 1 - 1e-10);
        ll += x > u ? std::log(chi) : std::log(1.0 - chi);
      }
    }
  }
  return ll;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("composite likelihood equals a direct sum over the catalog (property)") {
    const ExtendedParams p{{0.01, 0.4, 0.7, 0.9}, {0.8, 1.3}};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto c = small_catalog(seed);
      const auto classes = exact_lag_classes(c.sites, 3);
      const auto data = prepare_likelihood(c, 1.5, classes);
      CHECK(data.n_dropped_no_velocity == 1);
      CHECK(composite_loglik(p, data) == doctest::Approx(brute_force_loglik(c, 1.5, p, 3)).epsilon(1e-12));
    }
  }

  TEST_CASE("prepared trials match the joint-exceedance table") {
    const auto c = small_catalog(4);
    const auto classes = exact_lag_classes(c.sites, 2);
    const auto data = prepare_likelihood(c, 1.0, classes, {.zero_missing_velocity = true});
    const auto table = count_joint_exceedances(c, 1.0, classes);
    std::int64_t trials = 0, successes = 0;
    for (const auto& cell : table.cells) {
      trials += cell.trials;
      successes += cell.successes;
    }
    std::int64_t k = 0;
    for (const auto& e : data.episodes)
      for (auto x : e.exceed) k += x;
    CHECK(static_cast<std::int64_t>(data.n_trials()) == trials);
    CHECK(k == successes);
    CHECK(data.episodes.front().month == 2020 * 12 + 7);
  }

  TEST_CASE("scalar Bernoulli reduction is maximized at K / N") {
    for (auto [k, n] : {std::pair<long, long>{0, 10}, {3, 10}, {17, 1000}, {999, 1000}, {5, 5}, {1234, 98765}}) {
      const double chi = fit_scalar_chi(k, n);
      const double ref = std::clamp(static_cast<double>(k) / static_cast<double>(n), kChiClamp, 1.0 - kChiClamp);
      CHECK(std::abs(chi - ref) < 1e-8);
    }
    CHECK_THROWS_AS(fit_scalar_chi(3, 2), std::invalid_argument);
  }

  TEST_CASE("bernoulli log-likelihood formula") {
    CHECK(bernoulli_loglik(3, 10, 0.2) == doctest::Approx(3 * std::log(0.2) + 7 * std::log(0.8)));
    CHECK(std::isfinite(bernoulli_loglik(3, 10, 0.0)));
  }

  TEST_CASE("unconstrained transform round-trips (property)") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> b(0.01, 5.0), a(0.05, 1.95), e1(0.1, 5.0), e2(0.2, 9.0);
    for (int i = 0; i < 200; ++i) {
      const ExtendedParams p{{b(rng), b(rng), a(rng), a(rng)}, {e1(rng), e2(rng)}};
      const auto q = from_unconstrained(to_unconstrained(p, true), ExtendedParams{}, true);
      const auto pa = to_array(p), qa = to_array(q);
      for (int k = 0; k < 6; ++k) CHECK(qa[k] == doctest::Approx(pa[k]).epsilon(1e-9));
    }
  }

  TEST_CASE("WLS initializer is exact on model extremograms") {
    const VariogramParams th{0.4, 0.2, 1.2, 0.7};
    std::vector<ClassChi> classes;
    for (double d : {0.0, 1.0, 2.0, 3.0, 5.0}) {
      for (int tau = 0; tau <= 4; ++tau) {
        if (d == 0.0 && tau == 0) continue;
        classes.push_back({d, tau, chi_r({d, 0.0}, tau, th, {0, 0}), 10.0});
      }
    }
    const auto init = wls_initialize(classes);
    CHECK(init.beta1 == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(init.alpha1 == doctest::Approx(1.2).epsilon(1e-8));
    CHECK(init.beta2 == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(init.alpha2 == doctest::Approx(0.7).epsilon(1e-8));
    const std::vector<ClassChi> too_few{{1.0, 0, 0.5, 1.0}};
    CHECK_THROWS_AS(wls_initialize(too_few), std::invalid_argument);
  }

  TEST_CASE("fit with fixed advection recovers a simulated truth") {
    const VariogramParams truth{0.4, 0.2, 1.5, 1.0};
    const AdvectionTransform adv{0.5, 1.6};
    std::vector<Site> sites;
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i) sites.push_back({"p" + std::to_string(j * 5 + i), {double(i), double(j)}});
    const auto cat = simulate_pareto_catalog(sites, 6, 400, truth, adv, {0.5, 1.5}, 99);
    const auto data = prepare_likelihood(cat, 1.0, exact_lag_classes(sites, 5));
    FitSettings s;
    s.init = {{1.0, 1.0, 1.0, 1.0}, adv};
    s.fixed_adv = adv;
    const auto fit = fit_variogram(data, s);
    CHECK(fit.converged);
    CHECK(fit.params.theta.beta1 == doctest::Approx(0.4).epsilon(0.25));
    CHECK(fit.params.theta.beta2 == doctest::Approx(0.2).epsilon(0.25));
    CHECK(fit.params.theta.alpha1 == doctest::Approx(1.5).epsilon(0.25));
    CHECK(fit.params.theta.alpha2 == doctest::Approx(1.0).epsilon(0.25));
    CHECK(fit.loglik >= composite_loglik({truth, adv}, data) - 1e-6);
  }

  TEST_CASE("month jackknife leaves out each month once") {
    auto c = small_catalog(2);
    for (std::size_t k = 0; k < c.episodes.size(); ++k) c.episodes[k].t0 = static_cast<std::int64_t>(k % 3) * 9000;
    const auto data = prepare_likelihood(c, 1.0, exact_lag_classes(c.sites, 3));
    FitSettings s;
    s.init = {{0.5, 0.5, 1.0, 1.0}, {1.0, 1.0}};
    s.fixed_adv = AdvectionTransform{1.0, 1.0};
    const auto jk = jackknife_months(data, s);
    CHECK(jk.months.size() == 3);
    CHECK(jk.replicates.size() == 3);
    for (const auto& iv : jk.intervals) CHECK(iv.lower <= iv.upper);
  }
}
