#include "stormgen/simulation.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stormgen/errors.hpp"
#include "stormgen/parallel.hpp"
#include "stormgen/seeding.hpp"

namespace stormgen {

Vec2 SimulationDomain::lag(std::size_t i, std::size_t j) const {
  return points[i % points.size()] - points[j % points.size()];
}

int SimulationDomain::tau(std::size_t i, std::size_t j) const {
  return static_cast<int>(i / points.size()) - static_cast<int>(j / points.size());
}

void validate(const SimulationDomain& d) {
  if (d.points.empty()) throw std::invalid_argument("simulation domain has no point");
  if (d.n_steps < 1) throw std::invalid_argument("simulation domain needs at least one step");
  if (d.conditioning >= d.points.size()) throw std::invalid_argument("conditioning index out of range");
}

Eigen::MatrixXd build_covariance(const SimulationDomain& domain, const VariogramParams& theta, Velocity v) {
  validate(domain);
  validate(theta);
  const std::size_t n = domain.size();
  const std::size_t p0 = domain.conditioning;
  Eigen::VectorXd g0(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) g0[i] = variogram(domain.lag(i, p0), domain.tau(i, p0), theta, v);

  Eigen::MatrixXd c(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      const double g = variogram(domain.lag(i, j), domain.tau(i, j), theta, v);
      c(i, j) = c(j, i) = g0[i] + g0[j] - g;
    }
  }
  c.row(p0).setZero();
  c.col(p0).setZero();
  return c;
}

AnchoredGaussian::AnchoredGaussian(const SimulationDomain& domain, const VariogramParams& theta, Velocity v)
    : domain_(domain), theta_(theta), v_(v) {
  validate(domain);
  validate(theta);
  const std::size_t n = domain.size();
  const std::size_t p0 = domain.conditioning;
  if (n == 1) return;

  // Non-anchor points in order; the reduced matrix is built and factorized in
  // place so that only one n x n buffer is alive.
  std::vector<std::size_t> keep;
  keep.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != p0) keep.push_back(i);
  }
  std::vector<double> g0(keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) g0[a] = variogram(domain.lag(keep[a], p0), domain.tau(keep[a], p0), theta, v);
  double trace = 0.0;
  for (double g : g0) trace += 2.0 * g;

  const auto m = static_cast<Eigen::Index>(keep.size());
  lower_.resize(m, m);
  static constexpr double kJitter[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  for (double rel : kJitter) {
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index a = b; a < m; ++a) {
        const std::size_t i = keep[static_cast<std::size_t>(a)], j = keep[static_cast<std::size_t>(b)];
        lower_(a, b) = g0[static_cast<std::size_t>(a)] + g0[static_cast<std::size_t>(b)] -
                       variogram(domain.lag(i, j), domain.tau(i, j), theta, v);
      }
      lower_(b, b) += rel * trace;
    }
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(lower_);
    if (llt.info() == Eigen::Success) {
      lower_.triangularView<Eigen::StrictlyUpper>().setZero();
      jitter_ = rel * trace;
      return;
    }
  }
  lower_.resize(0, 0);
  std::ostringstream msg;
  msg << "covariance factorization failed with jitter up to 1e-8 * trace (" << domain.n_points() << " points x "
      << domain.n_steps << " steps, beta1=" << theta.beta1 << ", beta2=" << theta.beta2
      << ", alpha1=" << theta.alpha1 << ", alpha2=" << theta.alpha2 << ", v=(" << v.x << ", " << v.y << "))";
  throw FactorizationError(msg.str());
}

Eigen::VectorXd AnchoredGaussian::sample(Rng& rng) const {
  const Eigen::Index n = static_cast<Eigen::Index>(domain_.size());
  const Eigen::Index p0 = static_cast<Eigen::Index>(domain_.conditioning);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (lower_.rows() == 0) return w;
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(lower_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Eigen::VectorXd reduced = lower_.triangularView<Eigen::Lower>() * z;
  for (Eigen::Index i = 0, k = 0; i < n; ++i) {
    if (i == p0) continue;
    w[i] = reduced[k++];
  }
  return w;
}

ParetoDraw simulate_rpareto(const AnchoredGaussian& gaussian, std::size_t conditioning_site, Rng& rng) {
  const SimulationDomain& d = gaussian.domain();
  if (conditioning_site >= d.n_points()) throw std::invalid_argument("conditioning site out of range");
  const Eigen::VectorXd w = gaussian.sample(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ParetoDraw draw;
  draw.r = 1.0 / (1.0 - unif(rng));
  draw.conditioning_site = conditioning_site;
  const std::size_t p0 = conditioning_site;
  const double w0 = w[static_cast<Eigen::Index>(p0)];
  draw.y.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double g = variogram(d.lag(i, p0), d.tau(i, p0), gaussian.theta(), gaussian.velocity());
    draw.y[i] = draw.r * std::exp(w[static_cast<Eigen::Index>(i)] - w0 - g);
  }
  draw.y[p0] = draw.r;
  return draw;
}

ParetoDraw simulate_rpareto(const SimulationDomain& domain, const VariogramParams& theta, Velocity v,
                            std::uint64_t seed) {
  const AnchoredGaussian g(domain, theta, v);
  Rng rng(seed);
  return simulate_rpareto(g, domain.conditioning, rng);
}

double standardize_G(double z, double p0) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw std::domain_error("standardize_G: p0 must lie in [0, 1)");
  if (z < 0.0) return 0.0;
  if (z == 0.0) return p0;
  const double junction = 2.0 / (1.0 - p0);
  if (z < junction) return p0 + 0.25 * (1.0 - p0) * (1.0 - p0) * z;
  return 1.0 - 1.0 / z;
}

SimulatedEpisode to_rainfall(const ParetoDraw& draw, double u, const MarginalModel& marginal,
                             std::optional<double> precision, Velocity v) {
  validate(marginal);
  if (!(u > 0.0)) throw std::domain_error("rescaling threshold must be positive");
  SimulatedEpisode out;
  out.y = draw.y;
  out.r = draw.r;
  out.v = v;
  out.conditioning_site = draw.conditioning_site;
  out.corrected = precision.has_value();
  const std::size_t n = draw.y.size();
  out.z.resize(n);
  out.u.resize(n);
  out.x.resize(n);
  constexpr double kBelowOne = 1.0 - 1e-16;
  for (std::size_t i = 0; i < n; ++i) {
    out.z[i] = u * draw.y[i];
    out.u[i] = standardize_G(out.z[i], marginal.p0);
    const double level = std::min(out.u[i], kBelowOne);
    double x = level <= marginal.p0 ? 0.0 : mixed_quantile(level, marginal);
    if (precision && x > 0.0 && x < *precision) x = *precision;
    out.x[i] = x;
  }
  return out;
}

SimulatedEpisode generate_episode(const SimulationDomain& domain, const VariogramParams& theta, Velocity v_emp,
                                  const AdvectionTransform& adv, double u, const MarginalModel& marginal,
                                  std::uint64_t seed, std::optional<double> precision) {
  const Velocity v = transform_advection(v_emp, adv);
  const AnchoredGaussian g(domain, theta, v);
  Rng rng(seed);
  return to_rainfall(simulate_rpareto(g, domain.conditioning, rng), u, marginal, precision, v);
}

Velocity VelocitySampler::draw(Rng& rng) const {
  if (fixed) return *fixed;
  if (pool.empty()) return {};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

std::vector<GridEpisode> simulate_grid_ensemble(const EnsembleSpec& spec, const VariogramParams& theta,
                                                const MarginalModel& marginal, double u,
                                                const VelocitySampler& sampler) {
  std::vector<GridEpisode> out;
  if (spec.n_episodes == 0) return out;
  SimulationDomain domain;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) domain.points.push_back(spec.grid.center(i));
  domain.n_steps = spec.n_steps;
  domain.conditioning = 0;
  validate(domain);
  if (spec.conditioning_pixel && *spec.conditioning_pixel >= domain.n_points()) {
    throw std::invalid_argument("conditioning pixel outside the grid");
  }

  std::map<std::pair<double, double>, std::shared_ptr<const AnchoredGaussian>> cache;
  std::uniform_int_distribution<std::size_t> pick_pixel(0, domain.n_points() - 1);
  for (std::size_t i = 0; i < spec.n_episodes; ++i) {
    Rng rng(derive_seed(spec.seed, "grid-episode", i));
    GridEpisode e;
    e.id = static_cast<int>(i) + 1;
    e.pixel = spec.conditioning_pixel ? *spec.conditioning_pixel : pick_pixel(rng);
    e.v = sampler.draw(rng);
    auto& g = cache[{e.v.x, e.v.y}];
    if (!g) g = std::make_shared<const AnchoredGaussian>(domain, theta, e.v);
    e.sim = to_rainfall(simulate_rpareto(*g, e.pixel, rng), u, marginal, spec.precision, e.v);
    out.push_back(std::move(e));
  }
  return out;
}

Velocity RandomVelocityLaw::draw(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double angle = 2.0 * std::numbers::pi * unif(rng);
  const double speed = min_speed + (max_speed - min_speed) * unif(rng);
  return {speed * std::cos(angle), speed * std::sin(angle)};
}

EpisodeCatalog simulate_pareto_catalog(std::span<const Site> sites, int n_steps, std::size_t n_episodes,
                                       const VariogramParams& theta, const AdvectionTransform& adv,
                                       const RandomVelocityLaw& law, std::uint64_t seed) {
  EpisodeCatalog catalog;
  catalog.sites.assign(sites.begin(), sites.end());
  catalog.start_time = 0;
  catalog.step_seconds = 300;
  catalog.threshold = 1.0;
  catalog.episodes.resize(n_episodes);

  SimulationDomain base;
  for (const Site& s : sites) base.points.push_back(s.pos);
  base.n_steps = n_steps;

  parallel_for(n_episodes, [&](std::size_t i) {
    Rng rng(derive_seed(seed, "pareto-episode", i));
    std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
    SimulationDomain domain = base;
    domain.conditioning = pick(rng);
    const Velocity v_emp = law.draw(rng);
    const AnchoredGaussian g(domain, theta, transform_advection(v_emp, adv));
    ParetoDraw draw = simulate_rpareto(g, domain.conditioning, rng);

    Episode& e = catalog.episodes[i];
    e.id = static_cast<int>(i) + 1;
    e.site = domain.conditioning;
    e.t0 = static_cast<std::int64_t>(i) * n_steps;
    e.delta = n_steps;
    e.v_emp = v_emp;
    e.source = VelocitySource::gridded;
    e.window = std::move(draw.y);
  });
  return catalog;
}

}  // namespace stormgen
