#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stormgen/dependence.hpp"
#include "stormgen/episodes.hpp"
#include "stormgen/marginals.hpp"

namespace stormgen {

struct ExtremogramRow {
  std::size_t spatial_class = 0;
  int tau = 0;
  double distance = 0.0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double chi = 0.0;  // NaN when trials == 0
};

std::vector<ExtremogramRow> empirical_extremogram(const JointExceedanceTable& table);

struct VariogramRow {
  std::size_t spatial_class = 0;
  int tau = 0;
  double distance = 0.0;
  std::int64_t trials = 0;
  double chi = 0.0;
  double gamma = 0.0;
};

/// gamma = inverse_chi(chi); undefined and chi = 0 classes are dropped.
/// Rows are ordered by tau then distance, i.e. one spatial curve per temporal lag.
std::vector<VariogramRow> empirical_variogram(std::span<const ExtremogramRow> extremogram);

/// Model r-extremogram at each class's mean distance, along the direction
/// given by `direction` (unit vector; irrelevant when v = 0).
std::vector<double> theoretical_extremogram(std::span<const ExtremogramRow> extremogram,
                                            const VariogramParams& theta, Velocity v,
                                            Vec2 direction = {1.0, 0.0});

struct QqRow {
  double p = 0.0;
  double empirical = 0.0;
  double model = 0.0;
  double lower = 0.0;  // NaN without bootstrap
  double upper = 0.0;
};

struct QqResult {
  std::vector<QqRow> rows;
  bool degenerate = false;
};

/// Empirical vs fitted EGPD quantiles on a probability grid restricted to
/// empirical quantiles above the censoring threshold, with percentile
/// bootstrap bands (2.5 / 97.5 %) from resampling the values.
QqResult qq_egpd(std::span<const double> values, const EgpdParams& params, double censoring_threshold,
                 int n_bootstrap = 500, std::uint64_t seed = 0, int grid_size = 100);

/// P(X_a > u, X_b > u | X_s > u) for all site pairs (a, b), from a row-major
/// (observations x n_sites) matrix. NaN entries mark missing values.
struct TrivariateTable {
  std::size_t conditioning_site = 0;
  std::size_t n_sites = 0;
  std::int64_t n_conditioning = 0;
  bool defined = false;
  std::vector<double> prob;  // n_sites x n_sites; NaN when undefined

  double at(std::size_t a, std::size_t b) const { return prob[a * n_sites + b]; }
};

TrivariateTable trivariate_conditional(std::span<const double> rows, std::size_t n_sites, double u,
                                       std::size_t conditioning_site);

/// Sum of non-missing values of each episode window.
std::vector<double> cumulative_rain_distribution(std::span<const std::vector<double>> episodes);

}  // namespace stormgen
