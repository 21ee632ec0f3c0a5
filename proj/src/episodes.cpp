#include "stormgen/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stormgen/errors.hpp"
#include "stormgen/parallel.hpp"

namespace stormgen {

void validate(const EpisodeConfig& c) {
  if (!(c.q > 0.0 && c.q < 1.0)) throw std::invalid_argument("episode quantile must lie in (0, 1)");
  if (c.delta < 1) throw std::invalid_argument("episode duration must be at least one step");
  if (!(c.min_separation >= 0.0)) throw std::invalid_argument("minimum separation must be non-negative");
}

double threshold_from_quantile(const SpaceTimeData& data, double q, const QuantileOptions& opt) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile level must lie in (0, 1)");
  std::vector<double> v;
  for (double x : data.values()) {
    if (is_missing(x)) continue;
    if (opt.positive_only && !(x > 0.0)) continue;
    v.push_back(x);
  }
  if (v.empty()) throw DataError("no usable value to compute a threshold from");
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, q);
}

namespace {

struct Candidate {
  std::int64_t t;
  std::size_t site;
  double value;
};

std::vector<double> extract_window(const SpaceTimeData& data, std::int64_t t0, int delta) {
  const std::size_t ns = data.n_sites();
  std::vector<double> w(static_cast<std::size_t>(delta) * ns, kMissing);
  for (int tau = 0; tau < delta; ++tau) {
    const std::int64_t t = t0 + tau;
    if (t < 0 || t >= static_cast<std::int64_t>(data.n_steps())) continue;
    const auto slice = data.slice(static_cast<std::size_t>(t));
    std::copy(slice.begin(), slice.end(), w.begin() + static_cast<std::ptrdiff_t>(tau * ns));
  }
  return w;
}

}  // namespace

EpisodeCatalog select_episodes(const SpaceTimeData& data, double u, const EpisodeConfig& config) {
  if (config.delta < 1) throw std::invalid_argument("episode duration must be at least one step");
  if (!(config.min_separation >= 0.0)) throw std::invalid_argument("minimum separation must be non-negative");

  EpisodeCatalog catalog;
  catalog.sites = data.sites();
  catalog.start_time = data.start_time();
  catalog.step_seconds = data.step_seconds();
  catalog.threshold = u;

  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < data.n_steps(); ++t) {
    for (std::size_t s = 0; s < data.n_sites(); ++s) {
      const double x = data.at(t, s);
      if (!is_missing(x) && x > u) candidates.push_back({static_cast<std::int64_t>(t), s, x});
    }
  }
  const auto& sites = data.sites();
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.t != b.t) return a.t < b.t;
    if (sites[a.site].id != sites[b.site].id) return sites[a.site].id < sites[b.site].id;
    return a.value > b.value;
  });

  for (const Candidate& c : candidates) {
    if (config.max_episodes && catalog.episodes.size() >= *config.max_episodes) break;
    bool keep = true;
    // Kept episodes are chronological; only those within delta steps can conflict.
    for (auto it = catalog.episodes.rbegin(); it != catalog.episodes.rend(); ++it) {
      if (c.t - it->t0 >= config.delta) break;
      if (distance(sites[c.site].pos, sites[it->site].pos) < config.min_separation) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    Episode e;
    e.id = static_cast<int>(catalog.episodes.size()) + 1;
    e.site = c.site;
    e.t0 = c.t;
    e.delta = config.delta;
    e.window = extract_window(data, c.t, config.delta);
    catalog.episodes.push_back(std::move(e));
  }
  return catalog;
}

void attach_windows(EpisodeCatalog& catalog, const SpaceTimeData& data) {
  for (Episode& e : catalog.episodes) e.window = extract_window(data, e.t0, e.delta);
}

int count_exceedances(const Episode& e, double u) {
  int n = 0;
  for (double x : e.window) {
    if (!is_missing(x) && x > u) ++n;
  }
  return n;
}

int LagClasses::spatial_class(double d) const {
  auto it = std::upper_bound(spatial.begin(), spatial.end(), d,
                             [](double v, const DistanceBin& b) { return v < b.lo; });
  if (it == spatial.begin()) return -1;
  --it;
  if (d >= it->hi) return -1;
  return static_cast<int>(it - spatial.begin());
}

namespace {

std::vector<double> pair_distances(std::span<const Site> sites, bool include_zero) {
  std::vector<double> d;
  if (include_zero) d.push_back(0.0);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) d.push_back(distance(sites[i].pos, sites[j].pos));
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace

LagClasses exact_lag_classes(std::span<const Site> sites, int max_tau, double tol) {
  if (max_tau < 0) throw std::invalid_argument("max_tau must be non-negative");
  const std::vector<double> d = pair_distances(sites, true);
  std::vector<double> unique;
  for (double x : d) {
    if (unique.empty() || x - unique.back() > tol) unique.push_back(x);
  }
  LagClasses c;
  c.max_tau = max_tau;
  for (std::size_t k = 0; k < unique.size(); ++k) {
    const double lo = k == 0 ? 0.0 : 0.5 * (unique[k - 1] + unique[k]);
    const double hi = k + 1 < unique.size() ? 0.5 * (unique[k] + unique[k + 1]) : unique[k] + std::max(tol, 1e-9);
    c.spatial.push_back({lo, hi});
  }
  return c;
}

LagClasses equal_count_lag_classes(std::span<const Site> sites, int n_bins, int max_tau) {
  if (n_bins < 1) throw std::invalid_argument("need at least one distance bin");
  if (max_tau < 0) throw std::invalid_argument("max_tau must be non-negative");
  constexpr double kZero = 1e-6;
  LagClasses c;
  c.max_tau = max_tau;
  c.spatial.push_back({0.0, kZero});
  std::vector<double> d = pair_distances(sites, false);
  d.erase(std::remove_if(d.begin(), d.end(), [](double x) { return x < kZero; }), d.end());
  if (d.empty()) return c;
  std::vector<double> edges{kZero};
  for (int k = 1; k < n_bins; ++k) {
    const std::size_t idx = (static_cast<std::size_t>(k) * d.size()) / static_cast<std::size_t>(n_bins);
    const double e = d[std::min(idx, d.size() - 1)];
    if (e > edges.back()) edges.push_back(e);
  }
  edges.push_back(d.back() * (1.0 + 1e-12) + 1e-9);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) c.spatial.push_back({edges[k], edges[k + 1]});
  return c;
}

JointExceedanceTable count_joint_exceedances(const EpisodeCatalog& catalog, double u, const LagClasses& classes,
                                             const CountOptions& opt) {
  const std::size_t ns = catalog.n_sites();
  const std::size_t n_cells = classes.size();
  std::vector<std::vector<LagCount>> partial(catalog.episodes.size());

  parallel_for(catalog.episodes.size(), [&](std::size_t ie) {
    const Episode& e = catalog.episodes[ie];
    std::vector<LagCount> cells(n_cells);
    std::vector<int> site_class(ns);
    std::vector<double> site_dist(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      site_dist[s] = distance(catalog.sites[s].pos, catalog.sites[e.site].pos);
      site_class[s] = classes.spatial_class(site_dist[s]);
    }
    const int last = std::min(e.delta - 1, classes.max_tau);
    for (int tau = 0; tau <= last; ++tau) {
      for (std::size_t s = 0; s < ns; ++s) {
        if (tau == 0 && s == e.site && !opt.include_conditioning) continue;
        if (site_class[s] < 0) continue;
        const double x = e.value(tau, s, ns);
        if (is_missing(x)) continue;
        LagCount& cell = cells[classes.index(static_cast<std::size_t>(site_class[s]), tau)];
        ++cell.trials;
        if (x > u) ++cell.successes;
        cell.distance_sum += site_dist[s];
      }
    }
    partial[ie] = std::move(cells);
  });

  JointExceedanceTable table;
  table.classes = classes;
  table.cells.resize(n_cells);
  for (std::size_t c = 0; c < classes.spatial.size(); ++c) {
    for (int tau = 0; tau <= classes.max_tau; ++tau) {
      LagCount& cell = table.cells[classes.index(c, tau)];
      cell.spatial_class = c;
      cell.tau = tau;
    }
  }
  for (const auto& cells : partial) {
    for (std::size_t i = 0; i < n_cells; ++i) {
      table.cells[i].successes += cells[i].successes;
      table.cells[i].trials += cells[i].trials;
      table.cells[i].distance_sum += cells[i].distance_sum;
    }
  }
  return table;
}

std::vector<ExceedanceProfileRow> exceedance_count_profile(const SpaceTimeData& data, double u, int max_tau,
                                                           double q) {
  std::vector<ExceedanceProfileRow> rows;
  const std::size_t ns = data.n_sites();
  const std::size_t nt = data.n_steps();
  for (std::size_t a = 0; a < ns; ++a) {
    for (std::size_t b = a + 1; b < ns; ++b) {
      ExceedanceProfileRow r;
      r.q = q;
      r.u = u;
      r.spatial = true;
      r.lag = distance(data.sites()[a].pos, data.sites()[b].pos);
      r.site_a = a;
      r.site_b = b;
      for (std::size_t t = 0; t < nt; ++t) {
        const double xa = data.at(t, a);
        const double xb = data.at(t, b);
        if (is_missing(xa) || is_missing(xb)) continue;
        ++r.pairs;
        if (xa > u && xb > u) ++r.joint;
      }
      rows.push_back(r);
    }
  }
  for (int tau = 1; tau <= max_tau; ++tau) {
    ExceedanceProfileRow r;
    r.q = q;
    r.u = u;
    r.spatial = false;
    r.lag = tau;
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t t = 0; t + static_cast<std::size_t>(tau) < nt; ++t) {
        const double x0 = data.at(t, s);
        const double x1 = data.at(t + static_cast<std::size_t>(tau), s);
        if (is_missing(x0) || is_missing(x1)) continue;
        ++r.pairs;
        if (x0 > u && x1 > u) ++r.joint;
      }
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<ExceedanceProfileRow> exceedance_count_profile(const SpaceTimeData& data,
                                                           std::span<const double> q_list, int max_tau,
                                                           const QuantileOptions& opt) {
  std::vector<ExceedanceProfileRow> rows;
  for (double q : q_list) {
    const double u = threshold_from_quantile(data, q, opt);
    auto part = exceedance_count_profile(data, u, max_tau, q);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<TradeoffRow> episode_tradeoff(const SpaceTimeData& data, double u, std::span<const int> delta_grid,
                                          std::span<const double> dmin_grid) {
  std::vector<TradeoffRow> rows;
  for (int delta : delta_grid) {
    for (double dmin : dmin_grid) {
      EpisodeConfig cfg;
      cfg.delta = delta;
      cfg.min_separation = dmin;
      EpisodeCatalog c = select_episodes(data, u, cfg);
      rows.push_back({delta, dmin, c.episodes.size()});
    }
  }
  return rows;
}

}  // namespace stormgen
