#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stormgen {

/// EGPD with power transform P(x) = x^kappa of a GPD(xi, sigma).
struct EgpdParams {
  double xi = 0.0;
  double sigma = 1.0;  // mm
  double kappa = 1.0;
};

/// Rainfall marginal: point mass p0 at zero plus EGPD for positive amounts.
struct MarginalModel {
  double p0 = 0.0;
  EgpdParams egpd;
};

/// Left-censoring at an integer multiple of the gauge precision.
struct CensoringSpec {
  double precision = 0.0;  // mm
  int multiplier = 1;

  double threshold() const { return multiplier * precision; }
};

// Distribution functions. All throw std::domain_error on invalid arguments.

double gpd_sf(double y, double xi, double sigma);
double gpd_cdf(double y, double xi, double sigma);

double egpd_cdf(double x, const EgpdParams& p);
/// 1 - egpd_cdf(x), accurate in the upper tail.
double egpd_sf(double x, const EgpdParams& p);
double egpd_pdf(double x, const EgpdParams& p);
/// Analytic log density: log kappa + (kappa - 1) log H + log h.
double egpd_log_pdf(double x, const EgpdParams& p);
double egpd_quantile(double u, const EgpdParams& p);

double mixed_cdf(double x, const MarginalModel& m);
/// Returns 0 for u <= p0.
double mixed_quantile(double u, const MarginalModel& m);

void validate(const EgpdParams& p);
void validate(const MarginalModel& m);

// Censored maximum likelihood.

/// A set of positive observations sharing one censoring threshold.
struct CensoredSample {
  std::span<const double> values;
  double threshold = 0.0;
};

/// Censored log-likelihood. Values at or below the threshold contribute
/// log F(threshold); values above contribute log f(x). Returns -inf outside
/// the support.
double egpd_censored_loglik(std::span<const CensoredSample> groups, const EgpdParams& p);
double egpd_censored_loglik(std::span<const double> values, double threshold, const EgpdParams& p);

struct EgpdFitOptions {
  std::size_t min_positive = 50;
  int restarts = 3;
  double xi_lower = -0.5;
  double xi_upper = 1.0;
  double sigma_lower = 1e-6;
  double sigma_upper = 1e3;
  double kappa_lower = 1e-3;
  double kappa_upper = 1e2;
  bool standard_errors = true;
};

struct EgpdFit {
  EgpdParams params;
  double loglik = 0.0;
  /// Observed-information standard errors for (xi, sigma, kappa).
  std::optional<std::array<double, 3>> std_errors;
  std::size_t n = 0;
  std::size_t n_censored = 0;
  int evaluations = 0;
};

/// Throws FitError for empty, degenerate, fully censored or non-converging
/// samples.
EgpdFit fit_egpd_censored(std::span<const CensoredSample> groups, const EgpdFitOptions& opt = {});
EgpdFit fit_egpd_censored(std::span<const double> values, const CensoringSpec& censoring,
                          const EgpdFitOptions& opt = {});

/// Picks the censoring multiplier among `candidates` whose fit has the
/// smallest quantile RMSE on a common probability grid above the largest
/// candidate threshold.
struct CensoringChoice {
  int multiplier = 1;
  std::vector<double> rmse;  // one per candidate, NaN when the fit failed
};
CensoringChoice choose_censoring(std::span<const double> positive_values, double precision,
                                 std::span<const int> candidates = {},
                                 const EgpdFitOptions& opt = {});

// Multi-site marginal fitting.

/// One site's series; NaN marks a missing observation.
struct SiteSeries {
  std::string id;
  std::vector<double> values;
};

struct SiteMarginal {
  std::string id;
  std::size_t n_observed = 0;
  std::size_t n_zero = 0;
  std::size_t n_positive = 0;
  double p0 = 0.0;
  double censoring_threshold = 0.0;
  std::optional<EgpdFit> fit;
};

enum class PoolingMode { pooled, averaged };

struct MarginalFitResult {
  MarginalModel model;
  PoolingMode mode = PoolingMode::pooled;
  std::optional<EgpdFit> pooled_fit;
  std::vector<SiteMarginal> sites;
  std::vector<std::string> warnings;
};

/// `censoring` holds either one spec shared by all sites or one per site.
/// Sites with no usable data are excluded with a warning.
MarginalFitResult fit_marginal_model(std::span<const SiteSeries> series, PoolingMode mode,
                                     std::span<const CensoringSpec> censoring,
                                     const EgpdFitOptions& opt = {});

}  // namespace stormgen
