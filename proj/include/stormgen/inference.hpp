#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stormgen/dependence.hpp"
#include "stormgen/episodes.hpp"
#include "stormgen/optimize.hpp"

namespace stormgen {

struct ExtendedParams {
  VariogramParams theta;
  AdvectionTransform adv;
};

inline constexpr std::array<const char*, 6> kExtendedParamNames{"beta1", "beta2", "alpha1",
                                                                "alpha2", "eta1",  "eta2"};

std::array<double, 6> to_array(const ExtendedParams& p);
ExtendedParams from_array(std::span<const double> a);

/// Joint-exceedance indicators of one episode, grouped by temporal lag.
struct EpisodeTerms {
  int episode_id = 0;
  Velocity v_emp;
  int month = 0;
  /// Per point: spatial lag from the conditioning site, temporal lag, indicator.
  std::vector<double> hx;
  std::vector<double> hy;
  std::vector<int> tau;
  std::vector<std::uint8_t> exceed;
};

/// Likelihood inputs prepared once from a catalog.
struct LikelihoodData {
  std::vector<EpisodeTerms> episodes;
  int max_tau = 0;
  std::size_t n_dropped_no_velocity = 0;
  std::size_t n_trials() const;
};

struct PrepareOptions {
  /// Treat episodes without velocity as V = 0 instead of dropping them.
  bool zero_missing_velocity = false;
};

/// Keeps the (s, t) whose (|s - s0|, t - t0) falls in a lag class; drops the
/// conditioning point and missing values.
LikelihoodData prepare_likelihood(const EpisodeCatalog& catalog, double u, const LagClasses& classes,
                                  const PrepareOptions& opt = {});

/// chi is clamped to [1e-10, 1 - 1e-10] inside the logarithms.
inline constexpr double kChiClamp = 1e-10;

double bernoulli_loglik(std::int64_t successes, std::int64_t trials, double chi);

double episode_loglik(const ExtendedParams& p, const EpisodeTerms& e);

/// Composite Bernoulli log-likelihood summed over episodes (in episode order).
/// Throws std::invalid_argument for an empty input. Returns -inf for invalid params.
double composite_loglik(const ExtendedParams& p, const LikelihoodData& data);

/// Maximizes the Bernoulli likelihood of K successes in N trials over a free
/// scalar chi with the simplex optimizer (sanity reduction of the composite likelihood).
double fit_scalar_chi(std::int64_t successes, std::int64_t trials);

/// Empirical extremogram value for one lag class as used by the WLS initializer.
struct ClassChi {
  double distance = 0.0;  // representative |h|
  int tau = 0;
  double chi = 0.0;
  double weight = 0.0;    // pair count
};

/// Weighted least squares on log(gamma / 2): spatial slope from tau = 0 classes
/// with h > 0, temporal slope from classes at the smallest distance with
/// tau > 0. Throws std::invalid_argument when either regression has fewer than
/// two usable classes.
VariogramParams wls_initialize(std::span<const ClassChi> classes);
std::vector<ClassChi> class_chi_from_counts(const JointExceedanceTable& table);

enum class OptimizerKind { nelder_mead, bfgs };

struct FitSettings {
  ExtendedParams init;
  std::optional<AdvectionTransform> fixed_adv;
  /// Cap on the transformed speed (meters per step), evaluated at the fixed or
  /// initial advection parameters before optimization.
  std::optional<double> speed_cap;
  OptimizerKind optimizer = OptimizerKind::nelder_mead;
  NelderMeadOptions nelder_mead{.initial_step = 0.5, .ftol_abs = 1e-8, .ftol_rel = 1e-10, .xtol = 1e-6};
  BfgsOptions bfgs;
};

struct FitResult {
  ExtendedParams params;
  double loglik = 0.0;
  std::size_t n_episodes = 0;
  std::size_t n_capped = 0;
  bool converged = false;
  int evaluations = 0;
  std::string message;
  std::vector<ExtendedParams> jackknife;
};

/// Parameter transforms used for unconstrained optimization.
std::vector<double> to_unconstrained(const ExtendedParams& p, bool include_adv);
ExtendedParams from_unconstrained(std::span<const double> z, const ExtendedParams& base, bool include_adv);

inline constexpr double kEta2Lower = 0.1;
inline constexpr double kEta2Upper = 10.0;

/// Throws std::invalid_argument when no episode or trial remains.
FitResult fit_variogram(const LikelihoodData& data, const FitSettings& settings);

struct JackknifeInterval {
  double estimate = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct JackknifeResult {
  FitResult full;
  std::vector<int> months;
  std::vector<ExtendedParams> replicates;
  std::array<JackknifeInterval, 6> intervals;
};

/// Month-leave-one-out jackknife; needs at least three distinct months.
JackknifeResult jackknife_months(const LikelihoodData& data, const FitSettings& settings);

}  // namespace stormgen
