#include "stormgen/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "stormgen/errors.hpp"
#include "stormgen/optimize.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

constexpr double kXiZero = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::domain_error("GPD scale must be positive");
}

// log(1 + xi y / sigma) / xi, the GPD log-survival with a sign flip; +inf past the endpoint.
double gpd_neg_log_sf(double y, double xi, double sigma) {
  if (std::abs(xi) < kXiZero) return y / sigma;
  const double z = xi * y / sigma;
  if (z <= -1.0) return std::numeric_limits<double>::infinity();
  return std::log1p(z) / xi;
}

// log H(x) where H is the GPD cdf.
double gpd_log_cdf(double y, double xi, double sigma) {
  const double a = gpd_neg_log_sf(y, xi, sigma);
  if (std::isinf(a)) return 0.0;
  return std::log(-std::expm1(-a));
}

}  // namespace

void validate(const EgpdParams& p) {
  check_sigma(p.sigma);
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) throw std::domain_error("EGPD kappa must be positive");
  if (!std::isfinite(p.xi)) throw std::domain_error("EGPD xi must be finite");
}

void validate(const MarginalModel& m) {
  if (!(m.p0 >= 0.0 && m.p0 < 1.0)) throw std::domain_error("p0 must lie in [0, 1)");
  validate(m.egpd);
}

double gpd_sf(double y, double xi, double sigma) {
  check_sigma(sigma);
  if (!(y >= 0.0)) throw std::domain_error("gpd_sf: y must be non-negative");
  return std::exp(-gpd_neg_log_sf(y, xi, sigma));
}

double gpd_cdf(double y, double xi, double sigma) {
  check_sigma(sigma);
  if (!(y >= 0.0)) throw std::domain_error("gpd_cdf: y must be non-negative");
  return -std::expm1(-gpd_neg_log_sf(y, xi, sigma));
}

double egpd_cdf(double x, const EgpdParams& p) {
  validate(p);
  if (!(x >= 0.0)) throw std::domain_error("egpd_cdf: x must be non-negative");
  if (x == 0.0) return 0.0;
  return std::pow(gpd_cdf(x, p.xi, p.sigma), p.kappa);
}

double egpd_sf(double x, const EgpdParams& p) {
  validate(p);
  if (!(x >= 0.0)) throw std::domain_error("egpd_sf: x must be non-negative");
  if (x == 0.0) return 1.0;
  const double sf = gpd_sf(x, p.xi, p.sigma);
  return -std::expm1(p.kappa * std::log1p(-sf));
}

double egpd_log_pdf(double x, const EgpdParams& p) {
  validate(p);
  if (!(x > 0.0)) return kNegInf;
  const double a = gpd_neg_log_sf(x, p.xi, p.sigma);
  if (std::isinf(a)) return kNegInf;
  // log h = -log sigma - (1 + xi) * a, since h = (1/sigma) (1 + xi x / sigma)^(-1/xi - 1).
  const double log_h = -std::log(p.sigma) - (1.0 + p.xi) * a;
  const double log_cdf = gpd_log_cdf(x, p.xi, p.sigma);
  return std::log(p.kappa) + (p.kappa - 1.0) * log_cdf + log_h;
}

double egpd_pdf(double x, const EgpdParams& p) { return std::exp(egpd_log_pdf(x, p)); }

double egpd_quantile(double u, const EgpdParams& p) {
  validate(p);
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("egpd_quantile: u must lie in (0, 1)");
  // log(1 - u^(1/kappa)); log1p keeps tiny u from collapsing to x = 0.
  const double log_h = std::log(u) / p.kappa;
  const double log_tail = log_h < -1.0 ? std::log1p(-std::exp(log_h)) : std::log(-std::expm1(log_h));
  if (std::abs(p.xi) < kXiZero) return -p.sigma * log_tail;
  return p.sigma * std::expm1(-p.xi * log_tail) / p.xi;
}

double mixed_cdf(double x, const MarginalModel& m) {
  validate(m);
  if (!(x >= 0.0)) throw std::domain_error("mixed_cdf: x must be non-negative");
  if (x == 0.0) return m.p0;
  return m.p0 + (1.0 - m.p0) * egpd_cdf(x, m.egpd);
}

double mixed_quantile(double u, const MarginalModel& m) {
  validate(m);
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("mixed_quantile: u must lie in (0, 1)");
  if (u <= m.p0) return 0.0;
  return egpd_quantile((u - m.p0) / (1.0 - m.p0), m.egpd);
}

double egpd_censored_loglik(std::span<const CensoredSample> groups, const EgpdParams& p) {
  validate(p);
  double ll = 0.0;
  for (const CensoredSample& g : groups) {
    const double log_f_threshold = g.threshold > 0.0 ? p.kappa * gpd_log_cdf(g.threshold, p.xi, p.sigma) : kNegInf;
    for (double x : g.values) {
      if (x <= g.threshold) {
        ll += log_f_threshold;
      } else {
        ll += egpd_log_pdf(x, p);
      }
    }
  }
  return std::isnan(ll) ? kNegInf : ll;
}

double egpd_censored_loglik(std::span<const double> values, double threshold, const EgpdParams& p) {
  const CensoredSample g{values, threshold};
  return egpd_censored_loglik(std::span<const CensoredSample>(&g, 1), p);
}

namespace {

std::optional<std::array<double, 3>> observed_std_errors(std::span<const CensoredSample> groups,
                                                         const EgpdParams& at) {
  const std::array<double, 3> theta{at.xi, at.sigma, at.kappa};
  std::array<double, 3> h{};
  for (int i = 0; i < 3; ++i) h[i] = 1e-4 * std::max(std::abs(theta[i]), 1e-2);
  auto ll = [&](std::array<double, 3> t) {
    if (!(t[1] > 0.0 && t[2] > 0.0)) return kNegInf;
    return egpd_censored_loglik(groups, EgpdParams{t[0], t[1], t[2]});
  };
  Eigen::Matrix3d hess;
  const double f0 = ll(theta);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double v;
      if (i == j) {
        auto tp = theta, tm = theta;
        tp[i] += h[i];
        tm[i] -= h[i];
        v = (ll(tp) - 2.0 * f0 + ll(tm)) / (h[i] * h[i]);
      } else {
        auto tpp = theta, tpm = theta, tmp = theta, tmm = theta;
        tpp[i] += h[i], tpp[j] += h[j];
        tpm[i] += h[i], tpm[j] -= h[j];
        tmp[i] -= h[i], tmp[j] += h[j];
        tmm[i] -= h[i], tmm[j] -= h[j];
        v = (ll(tpp) - ll(tpm) - ll(tmp) + ll(tmm)) / (4.0 * h[i] * h[j]);
      }
      hess(i, j) = hess(j, i) = v;
    }
  }
  if (!hess.allFinite()) return std::nullopt;
  const Eigen::Matrix3d info = -hess;
  Eigen::LLT<Eigen::Matrix3d> llt(info);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::Matrix3d cov = llt.solve(Eigen::Matrix3d::Identity());
  std::array<double, 3> se{};
  for (int i = 0; i < 3; ++i) se[i] = std::sqrt(cov(i, i));
  return se;
}

}  // namespace

EgpdFit fit_egpd_censored(std::span<const CensoredSample> groups, const EgpdFitOptions& opt) {
  std::size_t n = 0;
  std::size_t n_censored = 0;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const CensoredSample& g : groups) {
    if (g.threshold < 0.0) throw std::domain_error("censoring threshold must be non-negative");
    for (double x : g.values) {
      if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("EGPD fit needs strictly positive finite values");
      ++n;
      sum += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      if (x <= g.threshold) ++n_censored;
    }
  }
  if (n == 0) throw FitError("EGPD fit: empty sample");
  if (n < opt.min_positive) {
    throw FitError("EGPD fit: " + std::to_string(n) + " positive values, at least " +
                   std::to_string(opt.min_positive) + " required");
  }
  if (n_censored == n) throw FitError("EGPD fit: every value is censored");
  if (lo == hi) throw FitError("EGPD fit did not converge: degenerate sample (all values equal)");

  auto unpack = [](std::span<const double> z) { return EgpdParams{z[0], std::exp(z[1]), std::exp(z[2])}; };
  const Objective objective = [&](std::span<const double> z) {
    const EgpdParams p = unpack(z);
    if (p.xi < opt.xi_lower || p.xi >= opt.xi_upper || p.sigma <= opt.sigma_lower ||
        p.sigma >= opt.sigma_upper || p.kappa <= opt.kappa_lower || p.kappa >= opt.kappa_upper) {
      return std::numeric_limits<double>::infinity();
    }
    return -egpd_censored_loglik(groups, p);
  };

  NelderMeadOptions nm;
  nm.initial_step = 0.5;
  nm.xtol = 1e-7;
  nm.ftol_abs = 1e-9;
  nm.ftol_rel = 1e-13;
  nm.restarts = opt.restarts;
  const std::vector<double> start{0.1, std::log(sum / static_cast<double>(n)), 0.0};
  const OptimResult r = nelder_mead(objective, start, nm);
  if (!r.converged) {
    throw FitError("EGPD fit did not converge: " + r.message, r.x, -r.value);
  }

  EgpdFit fit;
  fit.params = unpack(r.x);
  fit.loglik = -r.value;
  fit.n = n;
  fit.n_censored = n_censored;
  fit.evaluations = r.evaluations;
  if (opt.standard_errors) fit.std_errors = observed_std_errors(groups, fit.params);
  return fit;
}

EgpdFit fit_egpd_censored(std::span<const double> values, const CensoringSpec& censoring,
                          const EgpdFitOptions& opt) {
  const CensoredSample g{values, censoring.threshold()};
  return fit_egpd_censored(std::span<const CensoredSample>(&g, 1), opt);
}

CensoringChoice choose_censoring(std::span<const double> positive_values, double precision,
                                 std::span<const int> candidates, const EgpdFitOptions& opt) {
  static constexpr int kDefault[] = {1, 2, 3};
  if (candidates.empty()) candidates = kDefault;
  if (!(precision > 0.0)) throw std::domain_error("gauge precision must be positive");

  std::vector<double> sorted(positive_values.begin(), positive_values.end());
  std::sort(sorted.begin(), sorted.end());
  const int max_k = *std::max_element(candidates.begin(), candidates.end());
  const double floor = max_k * precision;

  constexpr int kGrid = 100;
  std::vector<double> probs;
  std::vector<double> emp;
  for (int j = 1; j <= kGrid; ++j) {
    const double p = static_cast<double>(j) / (kGrid + 1);
    const double q = sorted_quantile(sorted, p);
    if (q > floor) {
      probs.push_back(p);
      emp.push_back(q);
    }
  }

  CensoringChoice choice;
  double best = std::numeric_limits<double>::infinity();
  EgpdFitOptions quiet = opt;
  quiet.standard_errors = false;
  for (int k : candidates) {
    double rmse = std::numeric_limits<double>::quiet_NaN();
    try {
      const EgpdFit fit = fit_egpd_censored(sorted, CensoringSpec{precision, k}, quiet);
      double ss = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = egpd_quantile(probs[i], fit.params) - emp[i];
        ss += d * d;
      }
      if (!probs.empty()) rmse = std::sqrt(ss / static_cast<double>(probs.size()));
    } catch (const FitError&) {
    }
    choice.rmse.push_back(rmse);
    if (rmse < best) {
      best = rmse;
      choice.multiplier = k;
    }
  }
  return choice;
}

MarginalFitResult fit_marginal_model(std::span<const SiteSeries> series, PoolingMode mode,
                                     std::span<const CensoringSpec> censoring, const EgpdFitOptions& opt) {
  if (series.empty()) throw std::invalid_argument("fit_marginal_model: no sites");
  if (censoring.size() != 1 && censoring.size() != series.size()) {
    throw std::invalid_argument("fit_marginal_model: need one censoring spec or one per site");
  }

  MarginalFitResult result;
  result.mode = mode;
  std::vector<std::vector<double>> positives;
  std::vector<double> thresholds;
  std::size_t total_obs = 0;
  std::size_t total_zero = 0;

  for (std::size_t i = 0; i < series.size(); ++i) {
    const SiteSeries& s = series[i];
    SiteMarginal site;
    site.id = s.id;
    site.censoring_threshold = censoring[censoring.size() == 1 ? 0 : i].threshold();
    std::vector<double> pos;
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      if (v < 0.0) throw DataError("negative rainfall at site " + s.id);
      ++site.n_observed;
      if (v == 0.0) {
        ++site.n_zero;
      } else {
        pos.push_back(v);
      }
    }
    site.n_positive = pos.size();
    if (site.n_observed == 0) {
      result.warnings.push_back("site " + s.id + " has no data; excluded");
      continue;
    }
    site.p0 = static_cast<double>(site.n_zero) / static_cast<double>(site.n_observed);
    total_obs += site.n_observed;
    total_zero += site.n_zero;
    try {
      site.fit = fit_egpd_censored(pos, CensoringSpec{site.censoring_threshold, 1}, opt);
    } catch (const FitError& e) {
      result.warnings.push_back("site " + s.id + ": " + e.what());
    }
    positives.push_back(std::move(pos));
    thresholds.push_back(site.censoring_threshold);
    result.sites.push_back(std::move(site));
  }
  if (result.sites.empty()) throw DataError("no site with usable data");

  if (mode == PoolingMode::pooled) {
    std::vector<CensoredSample> groups;
    for (std::size_t i = 0; i < positives.size(); ++i) groups.push_back({positives[i], thresholds[i]});
    result.pooled_fit = fit_egpd_censored(groups, opt);
    result.model.p0 = static_cast<double>(total_zero) / static_cast<double>(total_obs);
    result.model.egpd = result.pooled_fit->params;
  } else {
    std::size_t n_fit = 0;
    double p0 = 0.0;
    EgpdParams avg{0.0, 0.0, 0.0};
    for (const SiteMarginal& s : result.sites) {
      p0 += s.p0;
      if (!s.fit) continue;
      ++n_fit;
      avg.xi += s.fit->params.xi;
      avg.sigma += s.fit->params.sigma;
      avg.kappa += s.fit->params.kappa;
    }
    if (n_fit == 0) throw FitError("no site could be fitted");
    const double k = static_cast<double>(n_fit);
    result.model.p0 = p0 / static_cast<double>(result.sites.size());
    result.model.egpd = {avg.xi / k, avg.sigma / k, avg.kappa / k};
  }
  return result;
}

}  // namespace stormgen
