#include "stormgen/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double representative_distance(const DistanceBin& bin) {
  return std::isfinite(bin.hi) && bin.lo > 0.0 ? 0.5 * (bin.lo + bin.hi) : bin.lo;
}

}  // namespace

std::vector<ExtremogramRow> empirical_extremogram(const JointExceedanceTable& table) {
  std::vector<ExtremogramRow> rows;
  rows.reserve(table.cells.size());
  for (const LagCount& c : table.cells) {
    ExtremogramRow r;
    r.spatial_class = c.spatial_class;
    r.tau = c.tau;
    r.successes = c.successes;
    r.trials = c.trials;
    r.distance = c.trials > 0 ? c.mean_distance() : representative_distance(table.classes.spatial[c.spatial_class]);
    r.chi = c.trials > 0 ? static_cast<double>(c.successes) / static_cast<double>(c.trials) : kNaN;
    rows.push_back(r);
  }
  return rows;
}

std::vector<VariogramRow> empirical_variogram(std::span<const ExtremogramRow> extremogram) {
  std::vector<VariogramRow> rows;
  for (const ExtremogramRow& e : extremogram) {
    if (e.trials == 0 || !(e.chi > 0.0)) continue;
    rows.push_back({e.spatial_class, e.tau, e.distance, e.trials, e.chi, inverse_chi(std::min(e.chi, 1.0))});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const VariogramRow& a, const VariogramRow& b) {
    if (a.tau != b.tau) return a.tau < b.tau;
    return a.distance < b.distance;
  });
  return rows;
}

std::vector<double> theoretical_extremogram(std::span<const ExtremogramRow> extremogram,
                                            const VariogramParams& theta, Velocity v, Vec2 direction) {
  std::vector<double> out;
  out.reserve(extremogram.size());
  for (const ExtremogramRow& e : extremogram) {
    const Vec2 h = e.distance * direction;
    out.push_back(chi_from_variogram(variogram(h, e.tau, theta, v)));
  }
  return out;
}

QqResult qq_egpd(std::span<const double> values, const EgpdParams& params, double censoring_threshold,
                 int n_bootstrap, std::uint64_t seed, int grid_size) {
  validate(params);
  if (grid_size < 1) throw std::invalid_argument("qq grid needs at least one point");
  QqResult result;
  std::vector<double> sorted;
  for (double x : values) {
    if (!std::isnan(x)) sorted.push_back(x);
  }
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < 2 || sorted.front() == sorted.back()) {
    result.degenerate = true;
    return result;
  }
  const auto n = static_cast<double>(sorted.size());
  const double below = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), censoring_threshold) -
                                           sorted.begin()) / n;
  if (below >= 1.0) {
    result.degenerate = true;
    return result;
  }

  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int i = 0; i < grid_size; ++i) {
    grid[static_cast<std::size_t>(i)] = below + (1.0 - below) * (i + 1) / (grid_size + 1.0);
  }

  std::vector<std::vector<double>> boot(grid.size());
  if (n_bootstrap > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, sorted.size() - 1);
    std::vector<double> resample(sorted.size());
    for (auto& b : boot) b.reserve(static_cast<std::size_t>(n_bootstrap));
    for (int b = 0; b < n_bootstrap; ++b) {
      for (double& x : resample) x = sorted[pick(rng)];
      std::sort(resample.begin(), resample.end());
      for (std::size_t i = 0; i < grid.size(); ++i) boot[i].push_back(sorted_quantile(resample, grid[i]));
    }
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    QqRow row;
    row.p = grid[i];
    row.empirical = sorted_quantile(sorted, grid[i]);
    row.model = egpd_quantile(grid[i], params);
    if (n_bootstrap > 0) {
      std::sort(boot[i].begin(), boot[i].end());
      row.lower = sorted_quantile(boot[i], 0.025);
      row.upper = sorted_quantile(boot[i], 0.975);
    } else {
      row.lower = row.upper = kNaN;
    }
    result.rows.push_back(row);
  }
  return result;
}

TrivariateTable trivariate_conditional(std::span<const double> rows, std::size_t n_sites, double u,
                                       std::size_t conditioning_site) {
  if (n_sites == 0 || rows.size() % n_sites != 0) {
    throw std::invalid_argument("trivariate_conditional: row length does not match the number of sites");
  }
  if (conditioning_site >= n_sites) throw std::invalid_argument("conditioning site out of range");
  TrivariateTable t;
  t.conditioning_site = conditioning_site;
  t.n_sites = n_sites;
  t.prob.assign(n_sites * n_sites, kNaN);

  std::vector<std::int64_t> joint(n_sites * n_sites, 0), total(n_sites * n_sites, 0);
  const std::size_t n_obs = rows.size() / n_sites;
  for (std::size_t r = 0; r < n_obs; ++r) {
    const double* x = rows.data() + r * n_sites;
    if (!(x[conditioning_site] > u)) continue;
    ++t.n_conditioning;
    for (std::size_t a = 0; a < n_sites; ++a) {
      if (std::isnan(x[a])) continue;
      for (std::size_t b = 0; b < n_sites; ++b) {
        if (std::isnan(x[b])) continue;
        ++total[a * n_sites + b];
        if (x[a] > u && x[b] > u) ++joint[a * n_sites + b];
      }
    }
  }
  t.defined = t.n_conditioning > 0;
  for (std::size_t k = 0; k < t.prob.size(); ++k) {
    if (total[k] > 0) t.prob[k] = static_cast<double>(joint[k]) / static_cast<double>(total[k]);
  }
  return t;
}

std::vector<double> cumulative_rain_distribution(std::span<const std::vector<double>> episodes) {
  std::vector<double> totals;
  totals.reserve(episodes.size());
  for (const auto& e : episodes) {
    double s = 0.0;
    for (double x : e) {
      if (!std::isnan(x)) s += x;
    }
    totals.push_back(s);
  }
  return totals;
}

}  // namespace stormgen
