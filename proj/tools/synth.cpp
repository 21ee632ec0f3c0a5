#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include "commands.hpp"
#include "stormgen/io.hpp"
#include "stormgen/seeding.hpp"
#include "stormgen/simulation.hpp"

namespace stormgen::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kPrecision = 0.2153;

double bucket(double x) { return std::round(x / kPrecision) * kPrecision; }

}  // namespace

// Storms are r-Pareto episodes on the gauges; the gridded field carries a
// Gaussian rain cell moving with the same empirical velocity, so velocity
// matching has something to track.
void cmd_synth_data(const PipelineConfig& base, const SynthOptions& opt, const std::string& dir) {
  if (opt.n_sites < 2 || opt.n_days < 1) throw ConfigError("synth-data needs at least two sites and one day");
  fs::create_directories(dir);
  Rng rng(derive_seed(base.seed, "synth-data"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Site> sites;
  for (std::size_t i = 0; i < opt.n_sites; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", i + 1);
    sites.push_back({id, {3000.0 * unif(rng), 3000.0 * unif(rng)}});
  }

  const std::int64_t step = 300;
  const std::int64_t start = *parse_iso8601("2020-08-15T00:00:00");
  const auto n_steps = static_cast<std::size_t>(opt.n_days) * 288;
  SpaceTimeData gauges(sites, n_steps, start, step);

  const MarginalModel margin{0.9, {0.262, 0.591, 0.270}};
  // Background: regional wet/dry Markov chain, independent intensities.
  bool wet = false;
  for (std::size_t t = 0; t < n_steps; ++t) {
    wet = wet ? unif(rng) > 0.05 : unif(rng) < 0.01;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      gauges.at(t, s) = wet && unif(rng) < 0.6 ? 0.5 * egpd_quantile(std::max(unif(rng), 1e-12), margin.egpd) : 0.0;
    }
  }

  const Units units{step};
  const ExtendedParams truth = params_to_native({1.0, 4.0, 0.3, 0.8, 1.0, 1.2}, units);
  GriddedField grid = make_gridded_field({6, 6, -750.0, -750.0, 1000.0}, static_cast<std::size_t>(opt.n_days) * 24,
                                         start, 3600);
  for (double& x : grid.data.values()) x = 0.0;

  const int delta = 12;
  std::int64_t last = -1000;
  std::vector<std::int64_t> starts;
  for (std::size_t k = 0; k < opt.n_storms; ++k) {
    starts.push_back(24 + static_cast<std::int64_t>(unif(rng) * static_cast<double>(n_steps - 72)));
  }
  std::sort(starts.begin(), starts.end());
  std::size_t n_storms = 0;
  for (std::int64_t t0 : starts) {
    if (t0 - last < 72) continue;
    last = t0;
    SimulationDomain domain;
    for (const Site& s : sites) domain.points.push_back(s.pos);
    domain.n_steps = delta;
    domain.conditioning = static_cast<std::size_t>(unif(rng) * static_cast<double>(sites.size())) % sites.size();
    const double angle = 2.0 * std::numbers::pi * unif(rng);
    const double speed = units.speed_to_native(1.0 + 4.0 * unif(rng));
    const Velocity v_emp{speed * std::cos(angle), speed * std::sin(angle)};
    const SimulatedEpisode ep = generate_episode(domain, truth.theta, v_emp, truth.adv, 100.0, margin,
                                                 derive_seed(base.seed, "synth-storm", n_storms));
    for (int tau = 0; tau < delta; ++tau) {
      for (std::size_t s = 0; s < sites.size(); ++s) {
        double& x = gauges.at(static_cast<std::size_t>(t0 + tau), s);
        x = std::max(x, ep.x[static_cast<std::size_t>(tau) * sites.size() + s]);
      }
    }
    // Rain cell on the hourly grid, centered on the conditioning gauge at t0.
    const Vec2 origin = sites[domain.conditioning].pos;
    const std::int64_t hour0 = t0 * step / 3600;
    for (std::int64_t h = hour0 - 3; h <= hour0 + 4; ++h) {
      if (h < 0 || h >= static_cast<std::int64_t>(grid.data.n_steps())) continue;
      const double dt_steps = static_cast<double>(h * 3600 - t0 * step) / static_cast<double>(step);
      const Vec2 center = origin + dt_steps * v_emp;
      for (std::size_t i = 0; i < grid.grid.size(); ++i) {
        const double d = distance(grid.grid.center(i), center);
        grid.data.at(static_cast<std::size_t>(h), i) += 6.0 * std::exp(-0.5 * d * d / (1200.0 * 1200.0));
      }
    }
    ++n_storms;
  }

  for (double& x : gauges.values()) x = unif(rng) < 0.005 ? kMissing : bucket(x);
  for (double& x : grid.data.values()) x = std::round(x * 10.0) / 10.0;

  {
    std::ofstream out(fs::path(dir) / "sites.csv");
    out << "site_id,x_m,y_m\n";
    for (const Site& s : sites) out << s.id << ',' << s.pos.x << ',' << s.pos.y << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "gauges.csv");
    out << "timestamp,site_id,value_mm\n";
    char buf[32];
    for (std::size_t t = 0; t < n_steps; ++t) {
      const std::string ts = format_iso8601(gauges.time_of(static_cast<std::int64_t>(t)));
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const double x = gauges.at(t, s);
        out << ts << ',' << sites[s].id << ',';
        if (!is_missing(x)) {
          std::snprintf(buf, sizeof buf, "%.4f", x);
          out << buf;
        }
        out << '\n';
      }
    }
  }
  io::write_gridded_csv((fs::path(dir) / "gridded.csv").string(), grid);

  PipelineConfig c = base;
  c.output = "out";
  c.data.sites = "sites.csv";
  c.data.gauges = "gauges.csv";
  c.data.gridded = "gridded.csv";
  c.data.dataset = "gauges";
  c.data.step_seconds = step;
  c.data.gridded_step_seconds = 3600;
  c.simulation.nx = 20;
  c.simulation.ny = 20;
  c.simulation.x0 = 0.0;
  c.simulation.y0 = 0.0;
  c.simulation.pixel = 150.0;
  c.simulation.n_episodes = 3;
  c.diagnostics.n_bootstrap = 200;
  std::ofstream(fs::path(dir) / "config.yaml") << to_yaml(c);
  std::cout << "synthetic dataset: " << sites.size() << " sites, " << n_steps << " steps, " << n_storms
            << " storms in " << dir << "\n";
}

}  // namespace stormgen::cli
