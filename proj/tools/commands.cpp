#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "stormgen/advection.hpp"
#include "stormgen/diagnostics.hpp"
#include "stormgen/episodes.hpp"
#include "stormgen/io.hpp"
#include "stormgen/marginals.hpp"
#include "stormgen/parallel.hpp"
#include "stormgen/seeding.hpp"
#include "stormgen/simulation.hpp"
#include "stormgen/validation.hpp"

namespace stormgen::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Plot-ready CSV: one header line, then rows.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw DataError("cannot write '" + path.string() + "'");
    out_ << header << '\n';
  }

  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

fs::path output_dir(const PipelineConfig& c) {
  fs::create_directories(c.output);
  return c.output;
}

fs::path require_artifact(const PipelineConfig& c, const std::string& file, const std::string& command) {
  fs::path p = fs::path(c.output) / file;
  if (!fs::exists(p)) throw MissingArtifact(p, command);
  return p;
}

Units dataset_units(const PipelineConfig& c) {
  return {c.data.dataset == "gauges" ? c.data.step_seconds : c.data.gridded_step_seconds};
}

GriddedField load_gridded(const std::string& path, std::int64_t step_seconds) {
  if (fs::path(path).extension() == ".sgrd") return io::read_gridded_binary(path);
  return io::read_gridded_csv(path, step_seconds);
}

SpaceTimeData load_dataset(const PipelineConfig& c) {
  if (c.data.dataset == "gauges") {
    if (c.data.sites.empty() || c.data.gauges.empty()) {
      throw ConfigError("data.sites and data.gauges must be set for the gauge dataset");
    }
    return io::read_gauge_csv(c.data.gauges, io::read_sites(c.data.sites), c.data.step_seconds);
  }
  if (c.data.gridded.empty()) throw ConfigError("data.gridded must be set for the gridded dataset");
  return load_gridded(c.data.gridded, c.data.gridded_step_seconds).data;
}

double read_value(const std::map<std::string, io::KeyValueEntry>& kv, const std::string& name,
                  const fs::path& file) {
  auto it = kv.find(name);
  if (it == kv.end()) throw DataError("'" + file.string() + "' has no entry '" + name + "'");
  return it->second.value;
}

double read_threshold(const PipelineConfig& c) {
  const fs::path p = require_artifact(c, "threshold.txt", "select-episodes");
  return read_value(io::read_key_values(p.string()), "u", p);
}

struct StoredMargins {
  MarginalModel common;
  double precision = 0.0;
  double censoring_threshold = 0.0;
  std::map<std::string, MarginalModel> sites;
};

StoredMargins read_margins(const PipelineConfig& c) {
  const fs::path p = require_artifact(c, "margins.txt", "fit-margins");
  const auto kv = io::read_key_values(p.string());
  StoredMargins m;
  m.common.p0 = read_value(kv, "p0", p);
  m.common.egpd = {read_value(kv, "xi", p), read_value(kv, "sigma", p), read_value(kv, "kappa", p)};
  m.precision = read_value(kv, "precision", p);
  m.censoring_threshold = read_value(kv, "censoring_threshold", p);
  validate(m.common);

  const fs::path ps = fs::path(c.output) / "margins_sites.csv";
  if (fs::exists(ps)) {
    const io::CsvTable t = io::read_csv_file(ps.string());
    const std::size_t ci = t.column("site_id"), cp = t.column("p0"), cx = t.column("xi"), cs = t.column("sigma"),
                      ck = t.column("kappa");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const long ln = t.line_numbers[r];
      MarginalModel mm{io::parse_value(t.rows[r][cp], ln),
                       {io::parse_value(t.rows[r][cx], ln), io::parse_value(t.rows[r][cs], ln),
                        io::parse_value(t.rows[r][ck], ln)}};
      if (std::isnan(mm.egpd.xi)) continue;
      m.sites[t.rows[r][ci]] = mm;
    }
  }
  return m;
}

ExtendedParams read_variogram(const PipelineConfig& c) {
  const fs::path p = require_artifact(c, "variogram.txt", "fit-variogram");
  const auto kv = io::read_key_values(p.string());
  std::array<double, 6> a{};
  for (std::size_t j = 0; j < 6; ++j) a[j] = read_value(kv, kExtendedParamNames[j], p);
  return from_array(a);
}

EpisodeCatalog read_advected_catalog(const PipelineConfig& c, const SpaceTimeData& data, double u) {
  const fs::path p = require_artifact(c, "episodes_advected.csv", "estimate-advection");
  return io::read_episode_catalog(p.string(), data, u);
}

LagClasses make_lag_classes(const PipelineConfig& c, std::span<const Site> sites, int delta) {
  const int max_tau = std::min(c.lags.max_tau, delta - 1);
  if (c.lags.kind == "exact") return exact_lag_classes(sites, max_tau);
  return equal_count_lag_classes(sites, c.lags.n_bins, max_tau);
}

int catalog_delta(const EpisodeCatalog& catalog, int fallback) {
  return catalog.episodes.empty() ? fallback : catalog.episodes.front().delta;
}

const char* source_name(VelocitySource s) {
  switch (s) {
    case VelocitySource::gridded: return "gridded";
    case VelocitySource::gauge_fallback: return "gauge_fallback";
    case VelocitySource::none: break;
  }
  return "none";
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace

ExtendedParams params_to_native(const std::array<double, 6>& k, const Units& u) {
  const double c = u.speed_to_kmh(1.0);
  ExtendedParams p;
  p.theta.alpha1 = k[2];
  p.theta.alpha2 = k[3];
  p.theta.beta1 = k[0] * std::pow(1000.0, -k[2]);
  p.theta.beta2 = k[1] * std::pow(u.steps_per_hour(), -k[3]);
  p.adv.eta2 = k[5];
  p.adv.eta1 = k[4] * std::pow(c, k[5] - 1.0);
  return p;
}

std::array<double, 6> params_to_kmh(const ExtendedParams& p, const Units& u) {
  const double c = u.speed_to_kmh(1.0);
  return {p.theta.beta1 * std::pow(1000.0, p.theta.alpha1),
          p.theta.beta2 * std::pow(u.steps_per_hour(), p.theta.alpha2),
          p.theta.alpha1,
          p.theta.alpha2,
          p.adv.eta1 * std::pow(c, 1.0 - p.adv.eta2),
          p.adv.eta2};
}

void cmd_fit_margins(const PipelineConfig& c) {
  const SpaceTimeData data = load_dataset(c);
  const fs::path dir = output_dir(c);

  std::vector<SiteSeries> series;
  std::vector<double> positive;
  for (std::size_t s = 0; s < data.n_sites(); ++s) {
    series.push_back({data.sites()[s].id, data.site_series(s)});
    for (double x : series.back().values) {
      if (x < 0.0) throw DataError("negative rainfall at site '" + data.sites()[s].id + "'");
      if (x > 0.0) positive.push_back(x);
    }
  }

  EgpdFitOptions opt;
  opt.min_positive = static_cast<std::size_t>(c.margins.min_positive);
  int multiplier = 0;
  if (c.margins.censoring_multiplier) {
    multiplier = *c.margins.censoring_multiplier;
  } else {
    const CensoringChoice choice = choose_censoring(positive, c.margins.precision, c.margins.censoring_candidates, opt);
    multiplier = choice.multiplier;
    CsvWriter w(dir / "censoring_choice.csv", "multiplier,threshold_mm,quantile_rmse");
    for (std::size_t k = 0; k < c.margins.censoring_candidates.size(); ++k) {
      const int m = c.margins.censoring_candidates[k];
      w.row(m, m * c.margins.precision, choice.rmse[k]);
    }
  }

  const CensoringSpec spec{c.margins.precision, multiplier};
  const PoolingMode mode = c.margins.pooling == "pooled" ? PoolingMode::pooled : PoolingMode::averaged;
  const MarginalFitResult r = fit_marginal_model(series, mode, std::span<const CensoringSpec>(&spec, 1), opt);
  for (const auto& w : r.warnings) warn(w);

  std::optional<std::array<double, 3>> se;
  if (r.pooled_fit) se = r.pooled_fit->std_errors;
  auto with_se = [&](const char* name, double v, std::size_t k) {
    io::KeyValueEntry e{name, v, std::nullopt};
    if (se) e.std_error = (*se)[k];
    return e;
  };
  io::write_key_values((dir / "margins.txt").string(),
                       {{"p0", r.model.p0, std::nullopt},
                        with_se("xi", r.model.egpd.xi, 0),
                        with_se("sigma", r.model.egpd.sigma, 1),
                        with_se("kappa", r.model.egpd.kappa, 2),
                        {"precision", c.margins.precision, std::nullopt},
                        {"censoring_multiplier", static_cast<double>(multiplier), std::nullopt},
                        {"censoring_threshold", spec.threshold(), std::nullopt},
                        {"loglik", r.pooled_fit ? r.pooled_fit->loglik : NAN, std::nullopt}},
                       std::string("marginal model (") + (mode == PoolingMode::pooled ? "pooled" : "averaged") +
                           "): name value [std_error]");

  CsvWriter w(dir / "margins_sites.csv", "site_id,n_observed,n_zero,n_positive,p0,xi,sigma,kappa,loglik");
  for (const SiteMarginal& s : r.sites) {
    if (s.fit) {
      w.row(s.id, s.n_observed, s.n_zero, s.n_positive, s.p0, s.fit->params.xi, s.fit->params.sigma,
            s.fit->params.kappa, s.fit->loglik);
    } else {
      w.row(s.id, s.n_observed, s.n_zero, s.n_positive, s.p0, NAN, NAN, NAN, NAN);
    }
  }
  std::cout << "marginal model: p0=" << r.model.p0 << " xi=" << r.model.egpd.xi << " sigma=" << r.model.egpd.sigma
            << " kappa=" << r.model.egpd.kappa << " (censoring " << multiplier << " x " << c.margins.precision
            << " mm)\n";
}

void cmd_select_episodes(const PipelineConfig& c) {
  const SpaceTimeData data = load_dataset(c);
  const fs::path dir = output_dir(c);
  const QuantileOptions qopt{c.episodes.positive_only};
  const double u = threshold_from_quantile(data, c.episodes.q, qopt);
  EpisodeConfig ec{c.episodes.q, c.episodes.delta, c.episodes.min_separation, c.episodes.max_episodes};
  const EpisodeCatalog catalog = select_episodes(data, u, ec);
  io::write_episode_catalog((dir / "episodes.csv").string(), catalog);
  io::write_key_values((dir / "threshold.txt").string(),
                       {{"q", c.episodes.q, std::nullopt},
                        {"u", u, std::nullopt},
                        {"delta", static_cast<double>(c.episodes.delta), std::nullopt},
                        {"min_separation", c.episodes.min_separation, std::nullopt},
                        {"n_episodes", static_cast<double>(catalog.episodes.size()), std::nullopt}},
                       "episode threshold");

  // Joint exceedance counts per lag, to check the choice of q.
  std::set<double> qs{0.9, c.episodes.q, 0.99};
  const std::vector<double> q_list(qs.begin(), qs.end());
  const auto profile = exceedance_count_profile(data, q_list, std::min(c.lags.max_tau, c.episodes.delta - 1), qopt);
  struct Agg {
    std::int64_t n_pairs = 0, min_joint = -1, total_joint = 0;
    double u = 0.0;
  };
  std::map<std::tuple<double, bool, double>, Agg> agg;
  for (const auto& r : profile) {
    Agg& a = agg[{r.q, r.spatial, std::round(r.lag * 1e3) / 1e3}];
    a.u = r.u;
    ++a.n_pairs;
    a.total_joint += r.joint;
    a.min_joint = a.min_joint < 0 ? r.joint : std::min(a.min_joint, r.joint);
  }
  CsvWriter w(dir / "exceedance_profile.csv", "q,u,kind,lag,n_pairs,min_joint,total_joint");
  for (const auto& [k, a] : agg) {
    w.row(std::get<0>(k), a.u, std::get<1>(k) ? "spatial" : "temporal", std::get<2>(k), a.n_pairs, a.min_joint,
          a.total_joint);
  }

  const std::vector<int> deltas{std::max(1, c.episodes.delta / 2), c.episodes.delta, 2 * c.episodes.delta};
  const std::vector<double> dmins{0.5 * c.episodes.min_separation, c.episodes.min_separation,
                                  2.0 * c.episodes.min_separation};
  CsvWriter t(dir / "episode_tradeoff.csv", "delta,min_separation,n_episodes");
  for (const auto& r : episode_tradeoff(data, u, deltas, dmins)) t.row(r.delta, r.min_separation, r.n_episodes);

  std::cout << "threshold u=" << u << " mm (q=" << c.episodes.q << "), " << catalog.episodes.size()
            << " episodes\n";
}

void cmd_estimate_advection(const PipelineConfig& c) {
  const SpaceTimeData data = load_dataset(c);
  const double u = read_threshold(c);
  const fs::path dir = output_dir(c);
  EpisodeCatalog catalog = io::read_episode_catalog(
      require_artifact(c, "episodes.csv", "select-episodes").string(), data, u);
  const Units units = dataset_units(c);

  MatchReport report;
  if (c.data.dataset == "gauges" && !c.data.gridded.empty()) {
    const GriddedField grid = load_gridded(c.data.gridded, c.data.gridded_step_seconds);
    const double ug = threshold_from_quantile(grid.data, c.episodes.q, {c.episodes.positive_only});
    const EpisodeCatalog gridded = select_episodes(
        grid.data, ug, {c.episodes.q, c.advection.gridded_delta, c.advection.gridded_min_separation, std::nullopt});
    report = match_and_assign(catalog, data, &gridded, &grid.data, {c.advection.pad_seconds});
  } else {
    report = match_and_assign(catalog, data, nullptr, nullptr, {c.advection.pad_seconds});
    if (c.data.dataset == "gridded") {
      for (Episode& e : catalog.episodes) {
        if (e.source == VelocitySource::gauge_fallback) e.source = VelocitySource::gridded;
      }
      report.n_gridded = report.n_fallback;
      report.n_fallback = 0;
    }
  }

  const SpeedFilterReport filter =
      filter_speed_range(catalog, units.speed_to_native(c.advection.max_empirical_speed_kmh));
  io::write_episode_catalog((dir / "episodes_advected.csv").string(), catalog);

  CsvWriter w(dir / "advection.csv", "episode_id,vx_m_per_step,vy_m_per_step,speed_kmh,direction_deg,source,n_displacements");
  for (const Episode& e : catalog.episodes) {
    if (e.v_emp) {
      w.row(e.id, e.v_emp->x, e.v_emp->y, units.speed_to_kmh(e.v_emp->norm()),
            std::atan2(e.v_emp->y, e.v_emp->x) * 180.0 / std::numbers::pi, source_name(e.source), e.n_displacements);
    } else {
      w.row(e.id, NAN, NAN, NAN, NAN, source_name(e.source), 0);
    }
  }
  io::write_key_values((dir / "advection_summary.txt").string(),
                       {{"n_gridded", static_cast<double>(report.n_gridded), std::nullopt},
                        {"n_gauge_fallback", static_cast<double>(report.n_fallback), std::nullopt},
                        {"n_missing", static_cast<double>(report.n_missing), std::nullopt},
                        {"n_before_speed_filter", static_cast<double>(filter.n_before), std::nullopt},
                        {"n_after_speed_filter", static_cast<double>(filter.n_after), std::nullopt},
                        {"fraction_removed", filter.fraction_removed(), std::nullopt}},
                       "velocity sources and speed filter");
  std::cout << "velocities: " << report.n_gridded << " gridded, " << report.n_fallback << " gauge fallback, "
            << report.n_missing << " missing; speed filter removed " << filter.n_before - filter.n_after << "\n";
}

void cmd_fit_variogram(const PipelineConfig& c) {
  const SpaceTimeData data = load_dataset(c);
  const double u = read_threshold(c);
  const fs::path dir = output_dir(c);
  const EpisodeCatalog catalog = read_advected_catalog(c, data, u);
  const Units units = dataset_units(c);
  const LagClasses classes = make_lag_classes(c, catalog.sites, catalog_delta(catalog, c.episodes.delta));

  FitSettings settings;
  settings.init = params_to_native(c.inference.init, units);
  if (c.inference.wls_init) {
    const JointExceedanceTable table = count_joint_exceedances(catalog, u, classes);
    try {
      settings.init.theta = wls_initialize(class_chi_from_counts(table));
    } catch (const std::invalid_argument& e) {
      warn(std::string("WLS initialization failed (") + e.what() + "); starting from inference.init");
    }
  }
  if (c.advection.fixed_eta) {
    std::array<double, 6> k = params_to_kmh(settings.init, units);
    k[4] = (*c.advection.fixed_eta)[0];
    k[5] = (*c.advection.fixed_eta)[1];
    settings.fixed_adv = params_to_native(k, units).adv;
    settings.init.adv = *settings.fixed_adv;
  }
  settings.speed_cap = units.speed_to_native(c.advection.speed_cap_kmh);
  settings.optimizer = c.inference.optimizer == "bfgs" ? OptimizerKind::bfgs : OptimizerKind::nelder_mead;
  settings.nelder_mead.max_evaluations = c.inference.max_evaluations;

  const LikelihoodData lik = prepare_likelihood(catalog, u, classes, {c.advection.zero_missing_velocity});
  if (lik.n_dropped_no_velocity > 0) warn(std::to_string(lik.n_dropped_no_velocity) + " episodes without velocity dropped");

  std::set<int> months;
  for (const auto& e : lik.episodes) months.insert(e.month);
  std::optional<JackknifeResult> jk;
  FitResult fit;
  if (c.inference.jackknife && months.size() >= 3) {
    jk = jackknife_months(lik, settings);
    fit = jk->full;
  } else {
    if (c.inference.jackknife) warn("jackknife needs at least three calendar months; skipped");
    fit = fit_variogram(lik, settings);
  }

  const auto est = to_array(fit.params);
  std::vector<io::KeyValueEntry> kv;
  for (std::size_t j = 0; j < 6; ++j) {
    kv.push_back({kExtendedParamNames[j], est[j], jk ? std::optional<double>(jk->intervals[j].std_error) : std::nullopt});
  }
  kv.push_back({"loglik", fit.loglik, std::nullopt});
  kv.push_back({"n_episodes", static_cast<double>(fit.n_episodes), std::nullopt});
  kv.push_back({"n_capped", static_cast<double>(fit.n_capped), std::nullopt});
  kv.push_back({"converged", fit.converged ? 1.0 : 0.0, std::nullopt});
  kv.push_back({"evaluations", static_cast<double>(fit.evaluations), std::nullopt});
  kv.push_back({"step_seconds", static_cast<double>(units.step_seconds), std::nullopt});
  io::write_key_values((dir / "variogram.txt").string(), kv,
                       "variogram and advection parameters, meters and steps: name value [jackknife std_error]");

  // Table in both unit systems; intervals are mapped through the same conversion.
  const auto kmh = params_to_kmh(fit.params, units);
  std::array<double, 6> lo_kmh, hi_kmh;
  lo_kmh.fill(NAN);
  hi_kmh.fill(NAN);
  if (jk) {
    std::array<double, 6> lo{}, hi{};
    for (std::size_t j = 0; j < 6; ++j) {
      lo[j] = jk->intervals[j].lower;
      hi[j] = jk->intervals[j].upper;
    }
    // Each converted parameter depends on its own value and the exponent
    // sharing its row, so convert the interval ends with the point estimate
    // of the exponent.
    for (std::size_t j = 0; j < 6; ++j) {
      auto at = [&](double v) {
        auto a = est;
        a[j] = v;
        return params_to_kmh(from_array(a), units)[j];
      };
      lo_kmh[j] = std::min(at(lo[j]), at(hi[j]));
      hi_kmh[j] = std::max(at(lo[j]), at(hi[j]));
    }
  }
  CsvWriter t(dir / "variogram_table.csv",
              "parameter,estimate_km_h,ci_lower_km_h,ci_upper_km_h,estimate_m_step,ci_lower_m_step,ci_upper_m_step,jackknife_se_m_step");
  for (std::size_t j = 0; j < 6; ++j) {
    t.row(kExtendedParamNames[j], kmh[j], lo_kmh[j], hi_kmh[j], est[j], jk ? jk->intervals[j].lower : NAN,
          jk ? jk->intervals[j].upper : NAN, jk ? jk->intervals[j].std_error : NAN);
  }
  if (jk) {
    CsvWriter r(dir / "jackknife.csv", "left_out_month,beta1,beta2,alpha1,alpha2,eta1,eta2");
    for (std::size_t i = 0; i < jk->replicates.size(); ++i) {
      const auto a = to_array(jk->replicates[i]);
      const int m = jk->months[i];
      r.row(std::to_string(m / 12) + "-" + (m % 12 < 9 ? "0" : "") + std::to_string(m % 12 + 1), a[0], a[1], a[2],
            a[3], a[4], a[5]);
    }
  }
  std::cout << "variogram (km, h): beta1=" << kmh[0] << " beta2=" << kmh[1] << " alpha1=" << kmh[2]
            << " alpha2=" << kmh[3] << " eta1=" << kmh[4] << " eta2=" << kmh[5] << " on " << fit.n_episodes
            << " episodes\n";
  if (!fit.converged) {
    throw FitError("variogram optimizer did not converge: " + fit.message, {est.begin(), est.end()}, fit.loglik);
  }
}

namespace {

// Observation sites with the per-site (or common) marginal model.
std::vector<MarginalModel> site_models(const PipelineConfig& c, const StoredMargins& m, std::span<const Site> sites) {
  std::vector<MarginalModel> out;
  for (const Site& s : sites) {
    auto it = m.sites.find(s.id);
    out.push_back(c.simulation.site_margins && it != m.sites.end() ? it->second : m.common);
  }
  return out;
}

double rain_from_pareto(double y, double u, const MarginalModel& m, std::optional<double> precision) {
  const double level = std::min(standardize_G(u * y, m.p0), 1.0 - 1e-16);
  double x = level <= m.p0 ? 0.0 : mixed_quantile(level, m);
  if (precision && x > 0.0 && x < *precision) x = *precision;
  return x;
}

}  // namespace

void cmd_simulate(const PipelineConfig& c) {
  const double u = read_threshold(c);
  const StoredMargins margins = read_margins(c);
  const ExtendedParams params = read_variogram(c);
  const fs::path dir = output_dir(c);
  const Units units = dataset_units(c);
  const std::optional<double> precision =
      c.simulation.correct_discretization ? std::optional<double>(margins.precision) : std::nullopt;
  const double cap = units.speed_to_native(c.advection.speed_cap_kmh);

  std::optional<SpaceTimeData> data;
  std::optional<EpisodeCatalog> observed;
  if (!c.simulation.fixed_velocity_kmh || c.simulation.replay_replicates > 0) {
    data = load_dataset(c);
    observed = read_advected_catalog(c, *data, u);
  }

  VelocitySampler sampler;
  if (c.simulation.fixed_velocity_kmh) {
    const auto& v = *c.simulation.fixed_velocity_kmh;
    sampler.fixed = Velocity{units.speed_to_native(v[0]), units.speed_to_native(v[1])};
  } else {
    for (const Episode& e : observed->episodes) {
      if (!e.v_emp) continue;
      if (auto v = cap_speed(transform_advection(*e.v_emp, params.adv), cap)) sampler.pool.push_back(*v);
    }
    if (sampler.pool.empty()) throw DataError("no observed velocity available for resampling");
  }

  EnsembleSpec spec;
  spec.grid = {c.simulation.nx, c.simulation.ny, c.simulation.x0, c.simulation.y0, c.simulation.pixel};
  spec.n_steps = c.simulation.n_steps;
  spec.n_episodes = c.simulation.n_episodes;
  spec.conditioning_pixel = c.simulation.conditioning_pixel;
  spec.precision = precision;
  spec.seed = derive_seed(c.seed, "simulate-grid");
  const auto ensemble = simulate_grid_ensemble(spec, params.theta, margins.common, u, sampler);
  io::write_simulation_csv((dir / "simulation.csv").string(), ensemble, spec.grid, spec.n_steps);
  CsvWriter w(dir / "simulation_episodes.csv", "episode_id,pixel,x_m,y_m,vx_m_per_step,vy_m_per_step,speed_kmh,r");
  for (const GridEpisode& e : ensemble) {
    const Vec2 p = spec.grid.center(e.pixel);
    w.row(e.id, e.pixel, p.x, p.y, e.v.x, e.v.y, units.speed_to_kmh(e.v.norm()), e.sim.r);
  }

  if (c.simulation.replay_replicates > 0) {
    // One simulated counterpart per observed episode: same conditioning site,
    // same threshold and same empirical velocity.
    const auto& sites = observed->sites;
    const std::vector<MarginalModel> models = site_models(c, margins, sites);
    const auto reps = static_cast<std::size_t>(c.simulation.replay_replicates);
    std::vector<const Episode*> eps;
    for (const Episode& e : observed->episodes) {
      if (e.v_emp || c.advection.zero_missing_velocity) eps.push_back(&e);
    }
    std::vector<std::vector<double>> out(eps.size() * reps);
    parallel_for(eps.size(), [&](std::size_t i) {
      const Episode& e = *eps[i];
      SimulationDomain domain;
      for (const Site& s : sites) domain.points.push_back(s.pos);
      domain.n_steps = e.delta;
      domain.conditioning = e.site;
      Velocity v = transform_advection(e.v_emp.value_or(Velocity{}), params.adv);
      if (!cap_speed(v, cap)) v = (cap / v.norm()) * v;
      const AnchoredGaussian g(domain, params.theta, v);
      for (std::size_t r = 0; r < reps; ++r) {
        Rng rng(derive_seed(c.seed, "replay", i * reps + r));
        const ParetoDraw draw = simulate_rpareto(g, e.site, rng);
        std::vector<double>& x = out[i * reps + r];
        x.resize(draw.y.size());
        for (std::size_t k = 0; k < draw.y.size(); ++k) x[k] = rain_from_pareto(draw.y[k], u, models[k % sites.size()], precision);
      }
    });
    CsvWriter rw(dir / "replay.csv", "episode_id,replicate,t,site_id,rain_mm");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& x = out[i * reps + r];
        for (std::size_t k = 0; k < x.size(); ++k) {
          rw.row(eps[i]->id, r + 1, k / sites.size(), sites[k % sites.size()].id, x[k]);
        }
      }
    }
  }
  std::cout << "simulated " << ensemble.size() << " grid episodes";
  if (c.simulation.replay_replicates > 0) std::cout << " and replayed " << observed->episodes.size() << " observed episodes";
  std::cout << "\n";
}

void cmd_diagnose(const PipelineConfig& c) {
  const SpaceTimeData data = load_dataset(c);
  const double u = read_threshold(c);
  const StoredMargins margins = read_margins(c);
  const ExtendedParams params = read_variogram(c);
  const EpisodeCatalog catalog = read_advected_catalog(c, data, u);
  const fs::path dir = output_dir(c);
  const LagClasses classes = make_lag_classes(c, catalog.sites, catalog_delta(catalog, c.episodes.delta));

  // Empirical extremogram and the model value averaged over the same (h, tau, V) points.
  const JointExceedanceTable table = count_joint_exceedances(catalog, u, classes);
  const auto extremo = empirical_extremogram(table);
  const LikelihoodData lik = prepare_likelihood(catalog, u, classes, {c.advection.zero_missing_velocity});
  std::vector<double> model_sum(classes.size(), 0.0), model_n(classes.size(), 0.0);
  for (const auto& e : lik.episodes) {
    const Velocity v = transform_advection(e.v_emp, params.adv);
    for (std::size_t k = 0; k < e.tau.size(); ++k) {
      const Vec2 h{e.hx[k], e.hy[k]};
      const int sc = classes.spatial_class(h.norm());
      if (sc < 0) continue;
      const std::size_t idx = classes.index(static_cast<std::size_t>(sc), e.tau[k]);
      model_sum[idx] += chi_r(h, e.tau[k], params.theta, v);
      model_n[idx] += 1.0;
    }
  }
  {
    CsvWriter w(dir / "extremogram.csv", "spatial_class,tau,distance_m,successes,trials,chi_empirical,chi_model");
    for (std::size_t i = 0; i < extremo.size(); ++i) {
      const auto& r = extremo[i];
      const std::size_t idx = classes.index(r.spatial_class, r.tau);
      w.row(r.spatial_class, r.tau, r.distance, r.successes, r.trials, r.chi,
            model_n[idx] > 0 ? model_sum[idx] / model_n[idx] : NAN);
    }
  }
  {
    CsvWriter w(dir / "variogram_empirical.csv", "tau,distance_m,trials,chi,gamma");
    for (const auto& r : empirical_variogram(extremo)) w.row(r.tau, r.distance, r.trials, r.chi, r.gamma);
  }

  // QQ plot of the pooled positive intensities.
  std::vector<double> positive;
  for (double x : data.values()) {
    if (x > 0.0) positive.push_back(x);
  }
  const QqResult qq = qq_egpd(positive, margins.common.egpd, margins.censoring_threshold, c.diagnostics.n_bootstrap,
                              derive_seed(c.seed, "qq-bootstrap"), c.diagnostics.qq_grid);
  if (qq.degenerate) warn("positive intensities are constant; QQ table is empty");
  {
    CsvWriter w(dir / "qq.csv", "p,empirical_mm,model_mm,lower_mm,upper_mm");
    for (const auto& r : qq.rows) w.row(r.p, r.empirical, r.model, r.lower, r.upper);
  }

  // Observed vs replayed episodes.
  const std::size_t ns = catalog.n_sites();
  std::vector<std::vector<double>> obs_windows;
  for (const Episode& e : catalog.episodes) obs_windows.push_back(e.window);
  {
    CsvWriter w(dir / "cumulative_observed.csv", "episode_id,total_mm");
    const auto totals = cumulative_rain_distribution(obs_windows);
    for (std::size_t i = 0; i < totals.size(); ++i) w.row(catalog.episodes[i].id, totals[i]);
  }

  std::size_t cond = 0;
  if (!c.diagnostics.conditioning_site.empty()) {
    auto it = std::find_if(catalog.sites.begin(), catalog.sites.end(),
                           [&](const Site& s) { return s.id == c.diagnostics.conditioning_site; });
    if (it == catalog.sites.end()) throw ConfigError("diagnostics.conditioning_site '" + c.diagnostics.conditioning_site + "' is not a site");
    cond = static_cast<std::size_t>(it - catalog.sites.begin());
  } else if (!catalog.episodes.empty()) {
    std::vector<int> freq(ns, 0);
    for (const Episode& e : catalog.episodes) ++freq[e.site];
    cond = static_cast<std::size_t>(std::max_element(freq.begin(), freq.end()) - freq.begin());
  }
  auto write_trivariate = [&](const fs::path& path, const std::vector<std::vector<double>>& windows) {
    std::vector<double> rows;
    for (const auto& w : windows) rows.insert(rows.end(), w.begin(), w.end());
    const TrivariateTable t = trivariate_conditional(rows, ns, u, cond);
    CsvWriter w(path, "conditioning_site,site_a,site_b,n_conditioning,probability");
    for (std::size_t a = 0; a < ns; ++a) {
      for (std::size_t b = 0; b < ns; ++b) {
        w.row(catalog.sites[cond].id, catalog.sites[a].id, catalog.sites[b].id, t.n_conditioning, t.at(a, b));
      }
    }
  };
  write_trivariate(dir / "trivariate_observed.csv", obs_windows);

  const fs::path replay = dir / "replay.csv";
  if (fs::exists(replay)) {
    const io::CsvTable t = io::read_csv_file(replay.string());
    const std::size_t ce = t.column("episode_id"), cr = t.column("replicate"), ct = t.column("t"),
                      cs = t.column("site_id"), cv = t.column("rain_mm");
    std::map<std::string, std::size_t> site_index;
    for (std::size_t s = 0; s < ns; ++s) site_index[catalog.sites[s].id] = s;
    std::map<std::pair<long, long>, std::vector<double>> sims;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const long ln = t.line_numbers[r];
      const auto& row = t.rows[r];
      auto key = std::make_pair(static_cast<long>(io::parse_value(row[ce], ln)), static_cast<long>(io::parse_value(row[cr], ln)));
      auto it = site_index.find(row[cs]);
      if (it == site_index.end()) throw DataError(replay.string() + ": unknown site '" + row[cs] + "'", ln);
      const auto tt = static_cast<std::size_t>(io::parse_value(row[ct], ln));
      auto& w = sims[key];
      if (w.size() < (tt + 1) * ns) w.resize((tt + 1) * ns, kMissing);
      w[tt * ns + it->second] = io::parse_value(row[cv], ln);
    }
    std::vector<std::vector<double>> sim_windows;
    std::vector<long> sim_ids;
    for (auto& [k, w] : sims) {
      sim_windows.push_back(std::move(w));
      sim_ids.push_back(k.first);
    }
    CsvWriter w(dir / "cumulative_simulated.csv", "episode_id,total_mm");
    const auto totals = cumulative_rain_distribution(sim_windows);
    for (std::size_t i = 0; i < totals.size(); ++i) w.row(sim_ids[i], totals[i]);
    write_trivariate(dir / "trivariate_simulated.csv", sim_windows);
  }
  std::cout << "diagnostics written to " << dir.string() << "\n";
}

void cmd_validate_recovery(const PipelineConfig& c) {
  const fs::path dir = output_dir(c);
  const auto& v = c.validation;
  RecoverySetting s;
  s.truth = from_array(v.truth);
  s.fix_advection = v.fix_advection;
  s.n_fits = v.n_fits;
  s.n_episodes = v.n_episodes;
  s.n_steps = v.n_steps;
  s.grid_side = v.grid_side;
  s.spacing = v.spacing;
  s.velocity = {v.min_speed, v.max_speed};
  s.seed = derive_seed(c.seed, "validate-recovery");
  const RecoveryResult r = run_recovery(s);

  CsvWriter w(dir / "recovery_runs.csv", "run,beta1,beta2,alpha1,alpha2,eta1,eta2,loglik,converged");
  for (const auto& run : r.runs) {
    const auto a = to_array(run.fit.params);
    w.row(run.index + 1, a[0], a[1], a[2], a[3], a[4], a[5], run.fit.loglik, run.fit.converged ? 1 : 0);
  }
  CsvWriter sw(dir / "recovery_summary.csv", "parameter,truth,median,relative_error");
  for (std::size_t j = 0; j < 6; ++j) sw.row(kExtendedParamNames[j], v.truth[j], r.median[j], r.relative_error[j]);
  std::cout << "recovery medians:";
  for (std::size_t j = 0; j < 6; ++j) std::cout << ' ' << kExtendedParamNames[j] << '=' << r.median[j];
  std::cout << "\n";
}

}  // namespace stormgen::cli
