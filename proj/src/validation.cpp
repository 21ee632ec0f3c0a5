#include "stormgen/validation.hpp"

#include <algorithm>
#include <cmath>

#include "stormgen/seeding.hpp"

namespace stormgen {

std::vector<Site> square_grid_sites(std::size_t side, double spacing) {
  GridGeometry g{side, side, 0.0, 0.0, spacing};
  return g.sites();
}

RecoveryResult run_recovery(const RecoverySetting& s) {
  const std::vector<Site> sites = square_grid_sites(s.grid_side, s.spacing);
  const LagClasses classes = exact_lag_classes(sites, s.n_steps - 1);

  FitSettings fit;
  fit.init = s.init.value_or(s.truth);
  if (s.fix_advection) {
    fit.fixed_adv = s.truth.adv;
    fit.init.adv = s.truth.adv;
  }

  RecoveryResult result;
  for (std::size_t k = 0; k < s.n_fits; ++k) {
    const EpisodeCatalog catalog = simulate_pareto_catalog(sites, s.n_steps, s.n_episodes, s.truth.theta,
                                                           s.truth.adv, s.velocity, derive_seed(s.seed, "recovery", k));
    const LikelihoodData data = prepare_likelihood(catalog, 1.0, classes);
    result.runs.push_back({k, fit_variogram(data, fit)});
  }

  const auto truth = to_array(s.truth);
  for (std::size_t j = 0; j < 6; ++j) {
    std::vector<double> v;
    for (const auto& r : result.runs) v.push_back(to_array(r.fit.params)[j]);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    result.median[j] = n == 0 ? NAN : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
    result.relative_error[j] = std::abs(result.median[j] - truth[j]) / std::abs(truth[j]);
  }
  return result;
}

}  // namespace stormgen
