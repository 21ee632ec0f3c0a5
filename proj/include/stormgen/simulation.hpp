#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stormgen/data.hpp"
#include "stormgen/dependence.hpp"
#include "stormgen/episodes.hpp"
#include "stormgen/marginals.hpp"

namespace stormgen {

using Rng = std::mt19937_64;

/// Space-time point set: `points` at steps 0..n_steps-1. Point index is
/// t * points.size() + s. The conditioning point is (conditioning, t = 0).
struct SimulationDomain {
  std::vector<Vec2> points;
  int n_steps = 1;
  std::size_t conditioning = 0;

  std::size_t n_points() const { return points.size(); }
  std::size_t size() const { return points.size() * static_cast<std::size_t>(n_steps); }
  Vec2 lag(std::size_t i, std::size_t j) const;  // spatial lag of point i relative to j
  int tau(std::size_t i, std::size_t j) const;
};

void validate(const SimulationDomain& d);

/// Covariance of W - W(p0): C(p, q) = g(p - p0) + g(q - p0) - g(p - q).
/// The conditioning row and column are zero.
Eigen::MatrixXd build_covariance(const SimulationDomain& domain, const VariogramParams& theta, Velocity v);

/// Cholesky factor of the anchored covariance with the anchor row/column
/// removed. Jitter escalates from 0 and 1e-12 to 1e-8 times the trace.
/// Since W has stationary increments, one factorization serves every
/// conditioning site of the domain: increments relative to any point follow
/// from increments relative to the anchor.
class AnchoredGaussian {
 public:
  AnchoredGaussian(const SimulationDomain& domain, const VariogramParams& theta, Velocity v);

  /// W(p) - W(anchor) at every point; zero at the anchor.
  Eigen::VectorXd sample(Rng& rng) const;

  const SimulationDomain& domain() const { return domain_; }
  const VariogramParams& theta() const { return theta_; }
  Velocity velocity() const { return v_; }
  double jitter() const { return jitter_; }

 private:
  SimulationDomain domain_;
  VariogramParams theta_;
  Velocity v_;
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

/// An r-Pareto realization Y = R exp(W - W(p0) - gamma(p - p0)).
struct ParetoDraw {
  std::vector<double> y;
  double r = 1.0;
  std::size_t conditioning_site = 0;
};

/// R is drawn by inversion, R = 1 / (1 - U), so P(R > v) = 1 / v for v >= 1.
ParetoDraw simulate_rpareto(const AnchoredGaussian& gaussian, std::size_t conditioning_site, Rng& rng);
ParetoDraw simulate_rpareto(const SimulationDomain& domain, const VariogramParams& theta, Velocity v,
                            std::uint64_t seed);

/// Pareto-to-uniform standardization with an atom p0 at zero.
double standardize_G(double z, double p0);

struct SimulatedEpisode {
  std::vector<double> y;  // Pareto scale
  std::vector<double> z;  // u * y
  std::vector<double> u;  // G(z)
  std::vector<double> x;  // rainfall, mm
  double r = 1.0;
  Velocity v;             // effective velocity used
  std::size_t conditioning_site = 0;
  bool corrected = false;
};

/// Z = u Y, U = G(Z), X = F^{-1}(U); with `precision`, values in (0, p) become p.
SimulatedEpisode to_rainfall(const ParetoDraw& draw, double u, const MarginalModel& marginal,
                             std::optional<double> precision, Velocity v = {});

SimulatedEpisode generate_episode(const SimulationDomain& domain, const VariogramParams& theta,
                                  Velocity v_emp, const AdvectionTransform& adv, double u,
                                  const MarginalModel& marginal, std::uint64_t seed,
                                  std::optional<double> precision = std::nullopt);

/// Draws effective velocities: a fixed vector or resampling with replacement from a pool.
struct VelocitySampler {
  std::optional<Velocity> fixed;
  std::vector<Velocity> pool;

  Velocity draw(Rng& rng) const;
};

struct EnsembleSpec {
  GridGeometry grid;
  int n_steps = 12;
  std::size_t n_episodes = 1;
  std::optional<std::size_t> conditioning_pixel;
  std::optional<double> precision;
  std::uint64_t seed = 0;
};

struct GridEpisode {
  int id = 0;
  std::size_t pixel = 0;
  Velocity v;
  SimulatedEpisode sim;
};

/// Episodes with a uniformly drawn (or fixed) conditioning pixel and sampled
/// velocity. Factorizations are cached per distinct velocity.
std::vector<GridEpisode> simulate_grid_ensemble(const EnsembleSpec& spec, const VariogramParams& theta,
                                                const MarginalModel& marginal, double u,
                                                const VelocitySampler& sampler);

/// Empirical velocity law for synthetic studies: uniform direction, uniform
/// speed in [min_speed, max_speed].
struct RandomVelocityLaw {
  double min_speed = 0.0;
  double max_speed = 1.0;

  Velocity draw(Rng& rng) const;
};

/// r-Pareto episodes with threshold u = 1 on the given sites: conditioning
/// site uniform among sites, t0 = first step, per-episode empirical velocity
/// from `law` and effective velocity A(V_emp). Windows hold Y.
EpisodeCatalog simulate_pareto_catalog(std::span<const Site> sites, int n_steps, std::size_t n_episodes,
                                       const VariogramParams& theta, const AdvectionTransform& adv,
                                       const RandomVelocityLaw& law, std::uint64_t seed);

}  // namespace stormgen
