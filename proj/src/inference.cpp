#include "stormgen/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stormgen/advection.hpp"
#include "stormgen/parallel.hpp"

namespace stormgen {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ975 = 1.959963984540054;

double clamp_chi(double chi) { return std::clamp(chi, kChiClamp, 1.0 - kChiClamp); }

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

bool params_valid(const ExtendedParams& p) {
  const auto& t = p.theta;
  return t.beta1 > 0.0 && t.beta2 > 0.0 && t.alpha1 > 0.0 && t.alpha1 <= 2.0 && t.alpha2 > 0.0 &&
         t.alpha2 <= 2.0 && p.adv.eta1 > 0.0 && p.adv.eta2 >= 0.0 && std::isfinite(t.beta1) &&
         std::isfinite(t.beta2) && std::isfinite(p.adv.eta1) && std::isfinite(p.adv.eta2);
}

double sum_loglik(const ExtendedParams& p, std::span<const EpisodeTerms* const> episodes) {
  if (!params_valid(p)) return kNegInf;
  std::vector<double> parts(episodes.size());
  parallel_for(episodes.size(), [&](std::size_t i) { parts[i] = episode_loglik(p, *episodes[i]); });
  double total = 0.0;
  for (double v : parts) total += v;
  return std::isnan(total) ? kNegInf : total;
}

std::vector<const EpisodeTerms*> all_episodes(const LikelihoodData& data) {
  std::vector<const EpisodeTerms*> out;
  out.reserve(data.episodes.size());
  for (const EpisodeTerms& e : data.episodes) out.push_back(&e);
  return out;
}

}  // namespace

std::array<double, 6> to_array(const ExtendedParams& p) {
  return {p.theta.beta1, p.theta.beta2, p.theta.alpha1, p.theta.alpha2, p.adv.eta1, p.adv.eta2};
}

ExtendedParams from_array(std::span<const double> a) {
  return {{a[0], a[1], a[2], a[3]}, {a[4], a[5]}};
}

std::size_t LikelihoodData::n_trials() const {
  std::size_t n = 0;
  for (const EpisodeTerms& e : episodes) n += e.exceed.size();
  return n;
}

LikelihoodData prepare_likelihood(const EpisodeCatalog& catalog, double u, const LagClasses& classes,
                                  const PrepareOptions& opt) {
  LikelihoodData data;
  data.max_tau = classes.max_tau;
  const std::size_t ns = catalog.n_sites();
  for (const Episode& e : catalog.episodes) {
    if (!e.v_emp && !opt.zero_missing_velocity) {
      ++data.n_dropped_no_velocity;
      continue;
    }
    EpisodeTerms terms;
    terms.episode_id = e.id;
    terms.v_emp = e.v_emp.value_or(Velocity{});
    terms.month = month_key(catalog.time_of(e.t0));
    const Vec2 s0 = catalog.sites[e.site].pos;
    const int last = std::min(e.delta - 1, classes.max_tau);
    for (int tau = 0; tau <= last; ++tau) {
      for (std::size_t s = 0; s < ns; ++s) {
        if (tau == 0 && s == e.site) continue;
        const Vec2 h = catalog.sites[s].pos - s0;
        if (classes.spatial_class(h.norm()) < 0) continue;
        const double x = e.value(tau, s, ns);
        if (is_missing(x)) continue;
        terms.hx.push_back(h.x);
        terms.hy.push_back(h.y);
        terms.tau.push_back(tau);
        terms.exceed.push_back(x > u ? 1 : 0);
      }
    }
    data.episodes.push_back(std::move(terms));
  }
  return data;
}

double bernoulli_loglik(std::int64_t k, std::int64_t n, double chi) {
  const double c = clamp_chi(chi);
  return static_cast<double>(k) * std::log(c) + static_cast<double>(n - k) * std::log1p(-c);
}

double episode_loglik(const ExtendedParams& p, const EpisodeTerms& e) {
  const Velocity v = transform_advection(e.v_emp, p.adv);
  const auto& t = p.theta;
  int max_tau = 0;
  for (int tau : e.tau) max_tau = std::max(max_tau, tau);
  std::vector<double> temporal(static_cast<std::size_t>(max_tau) + 1, 0.0);
  for (int tau = 1; tau <= max_tau; ++tau) temporal[tau] = t.beta2 * std::pow(static_cast<double>(tau), t.alpha2);

  const double half_alpha1 = 0.5 * t.alpha1;
  double ll = 0.0;
  for (std::size_t i = 0; i < e.exceed.size(); ++i) {
    const double tau = e.tau[i];
    const double dx = e.hx[i] - tau * v.x;
    const double dy = e.hy[i] - tau * v.y;
    const double d2 = dx * dx + dy * dy;
    const double spatial = d2 > 0.0 ? t.beta1 * std::exp(half_alpha1 * std::log(d2)) : 0.0;
    const double gamma = 2.0 * (spatial + temporal[e.tau[i]]);
    const double chi = clamp_chi(std::erfc(0.5 * std::sqrt(gamma)));
    ll += e.exceed[i] ? std::log(chi) : std::log1p(-chi);
  }
  return ll;
}

double composite_loglik(const ExtendedParams& p, const LikelihoodData& data) {
  if (data.episodes.empty()) throw std::invalid_argument("composite likelihood: empty catalog");
  const auto eps = all_episodes(data);
  return sum_loglik(p, eps);
}

double fit_scalar_chi(std::int64_t k, std::int64_t n) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("fit_scalar_chi: need 0 <= K <= N, N > 0");
  const Objective f = [&](std::span<const double> z) { return -bernoulli_loglik(k, n, logistic(z[0])); };
  NelderMeadOptions opt;
  opt.initial_step = 1.0;
  opt.xtol = 1e-12;
  opt.ftol_abs = 0.0;
  opt.ftol_rel = 1e-16;
  opt.restarts = 3;
  const OptimResult r = nelder_mead(f, {0.0}, opt);
  return clamp_chi(logistic(r.x[0]));
}

std::vector<ClassChi> class_chi_from_counts(const JointExceedanceTable& table) {
  std::vector<ClassChi> out;
  for (const LagCount& c : table.cells) {
    if (c.trials <= 0) continue;
    out.push_back({c.mean_distance(), c.tau, static_cast<double>(c.successes) / static_cast<double>(c.trials),
                   static_cast<double>(c.trials)});
  }
  return out;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("WLS initialization: lags do not vary");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

bool usable(const ClassChi& c) { return c.weight > 0.0 && c.chi > 0.0 && c.chi < 1.0; }

}  // namespace

VariogramParams wls_initialize(std::span<const ClassChi> classes) {
  std::size_t positive = 0;
  for (const ClassChi& c : classes) positive += c.weight > 0.0 ? 1 : 0;
  if (positive < 4) {
    throw std::invalid_argument("WLS initialization needs at least 4 lag classes with positive counts; "
                                "use a default initial value instead");
  }

  std::vector<double> x, y, w;
  for (const ClassChi& c : classes) {
    if (c.tau != 0 || !(c.distance > 0.0) || !usable(c)) continue;
    x.push_back(std::log(c.distance));
    y.push_back(std::log(0.5 * inverse_chi(c.chi)));
    w.push_back(c.weight);
  }
  if (x.size() < 2) {
    throw std::invalid_argument("WLS initialization needs at least 2 usable spatial classes; "
                                "use a default initial value instead");
  }
  const LineFit sp = weighted_line(x, y, w);
  VariogramParams theta;
  theta.alpha1 = std::clamp(sp.slope, 1e-3, 2.0);
  theta.beta1 = std::exp(sp.intercept);

  double h_min = std::numeric_limits<double>::infinity();
  for (const ClassChi& c : classes) {
    if (c.tau > 0 && usable(c)) h_min = std::min(h_min, c.distance);
  }
  x.clear(), y.clear(), w.clear();
  for (const ClassChi& c : classes) {
    if (c.tau <= 0 || !usable(c) || c.distance > h_min * (1.0 + 1e-9) + 1e-12) continue;
    double g = 0.5 * inverse_chi(c.chi);
    if (c.distance > 0.0) {
      const double residual = g - theta.beta1 * std::pow(c.distance, theta.alpha1);
      if (residual > 0.0) g = residual;
    }
    x.push_back(std::log(static_cast<double>(c.tau)));
    y.push_back(std::log(g));
    w.push_back(c.weight);
  }
  if (x.size() < 2) {
    throw std::invalid_argument("WLS initialization needs at least 2 usable temporal classes; "
                                "use a default initial value instead");
  }
  const LineFit tp = weighted_line(x, y, w);
  theta.alpha2 = std::clamp(tp.slope, 1e-3, 2.0);
  theta.beta2 = std::exp(tp.intercept);
  return theta;
}

std::vector<double> to_unconstrained(const ExtendedParams& p, bool include_adv) {
  std::vector<double> z{std::log(p.theta.beta1), std::log(p.theta.beta2), logit(0.5 * p.theta.alpha1),
                        logit(0.5 * p.theta.alpha2)};
  if (include_adv) {
    z.push_back(std::log(p.adv.eta1));
    const double lo = std::log(kEta2Lower), hi = std::log(kEta2Upper);
    z.push_back(logit((std::log(p.adv.eta2) - lo) / (hi - lo)));
  }
  return z;
}

ExtendedParams from_unconstrained(std::span<const double> z, const ExtendedParams& base, bool include_adv) {
  ExtendedParams p = base;
  p.theta.beta1 = std::exp(z[0]);
  p.theta.beta2 = std::exp(z[1]);
  p.theta.alpha1 = 2.0 * logistic(z[2]);
  p.theta.alpha2 = 2.0 * logistic(z[3]);
  if (include_adv) {
    p.adv.eta1 = std::exp(z[4]);
    const double lo = std::log(kEta2Lower), hi = std::log(kEta2Upper);
    p.adv.eta2 = std::exp(lo + (hi - lo) * logistic(z[5]));
  }
  return p;
}

namespace {

FitResult fit_subset(std::span<const EpisodeTerms* const> input, const FitSettings& settings) {
  validate(settings.init.theta);
  const bool include_adv = !settings.fixed_adv.has_value();
  ExtendedParams base = settings.init;
  if (settings.fixed_adv) base.adv = *settings.fixed_adv;
  validate(base.adv);
  if (include_adv) {
    base.adv.eta2 = std::clamp(base.adv.eta2, kEta2Lower * (1.0 + 1e-9), kEta2Upper * (1.0 - 1e-9));
  }

  FitResult result;
  std::vector<const EpisodeTerms*> episodes;
  std::size_t trials = 0;
  for (const EpisodeTerms* e : input) {
    if (settings.speed_cap && !cap_speed(transform_advection(e->v_emp, base.adv), *settings.speed_cap)) {
      ++result.n_capped;
      continue;
    }
    episodes.push_back(e);
    trials += e->exceed.size();
  }
  if (episodes.empty()) throw std::invalid_argument("variogram fit: no episode left");
  if (trials == 0) throw std::invalid_argument("variogram fit: no observed trial in any episode");
  result.n_episodes = episodes.size();

  const Objective objective = [&](std::span<const double> z) {
    return -sum_loglik(from_unconstrained(z, base, include_adv), episodes);
  };
  const std::vector<double> z0 = to_unconstrained(base, include_adv);
  OptimResult r;
  if (settings.optimizer == OptimizerKind::bfgs) {
    r = bfgs(objective, z0, settings.bfgs);
  } else {
    r = nelder_mead(objective, z0, settings.nelder_mead);
  }
  result.params = from_unconstrained(r.x, base, include_adv);
  result.loglik = -r.value;
  result.converged = r.converged;
  result.evaluations = r.evaluations;
  result.message = r.message;
  return result;
}

}  // namespace

FitResult fit_variogram(const LikelihoodData& data, const FitSettings& settings) {
  const auto eps = all_episodes(data);
  return fit_subset(eps, settings);
}

JackknifeResult jackknife_months(const LikelihoodData& data, const FitSettings& settings) {
  JackknifeResult out;
  for (const EpisodeTerms& e : data.episodes) out.months.push_back(e.month);
  std::sort(out.months.begin(), out.months.end());
  out.months.erase(std::unique(out.months.begin(), out.months.end()), out.months.end());
  if (out.months.size() < 3) throw std::invalid_argument("jackknife needs at least 3 distinct months");

  out.full = fit_variogram(data, settings);
  FitSettings refit = settings;
  refit.init = out.full.params;

  for (int month : out.months) {
    std::vector<const EpisodeTerms*> subset;
    for (const EpisodeTerms& e : data.episodes) {
      if (e.month != month) subset.push_back(&e);
    }
    out.replicates.push_back(fit_subset(subset, refit).params);
  }
  out.full.jackknife = out.replicates;

  const double m = static_cast<double>(out.replicates.size());
  const auto estimate = to_array(out.full.params);
  for (std::size_t k = 0; k < 6; ++k) {
    double avg = 0.0;
    for (const ExtendedParams& r : out.replicates) avg += to_array(r)[k];
    avg /= m;
    double ss = 0.0;
    for (const ExtendedParams& r : out.replicates) {
      const double d = to_array(r)[k] - avg;
      ss += d * d;
    }
    const double se = std::sqrt((m - 1.0) / m * ss);
    out.intervals[k] = {estimate[k], se, estimate[k] - kZ975 * se, estimate[k] + kZ975 * se};
  }
  return out;
}

}  // namespace stormgen
