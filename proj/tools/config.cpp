#include "config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "stormgen/errors.hpp"

namespace stormgen::cli {

namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Reads keys of one mapping and rejects the ones nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsMap()) throw ConfigError("'" + name_ + "' must be a mapping");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_[key] || node_[key].IsNull()) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + path(key) + "'");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    if (node_[key].IsNull()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  template <class T, std::size_t N>
  void get(const std::string& key, std::array<T, N>& out) {
    seen_.insert(key);
    if (!node_ || !node_[key] || node_[key].IsNull()) return;
    std::vector<T> v;
    get(key, v);
    if (v.size() != N) throw ConfigError("'" + path(key) + "' needs " + std::to_string(N) + " values");
    std::copy(v.begin(), v.end(), out.begin());
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_ ? node_[key] : YAML::Node(), path(key));
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path(key) + "'");
    }
  }

 private:
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

PipelineConfig parse_config(const std::string& yaml, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  PipelineConfig c;
  Section top(root, "");
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  top.get("output", c.output);
  {
    auto s = top.child("data");
    s.get("sites", c.data.sites);
    s.get("gauges", c.data.gauges);
    s.get("gridded", c.data.gridded);
    s.get("dataset", c.data.dataset);
    s.get("step_seconds", c.data.step_seconds);
    s.get("gridded_step_seconds", c.data.gridded_step_seconds);
    s.finish();
  }
  {
    auto s = top.child("margins");
    s.get("precision", c.margins.precision);
    s.get("censoring_candidates", c.margins.censoring_candidates);
    s.get("censoring_multiplier", c.margins.censoring_multiplier);
    s.get("pooling", c.margins.pooling);
    s.get("min_positive", c.margins.min_positive);
    s.finish();
  }
  {
    auto s = top.child("episodes");
    s.get("q", c.episodes.q);
    s.get("delta", c.episodes.delta);
    s.get("min_separation", c.episodes.min_separation);
    s.get("max_episodes", c.episodes.max_episodes);
    s.get("positive_only", c.episodes.positive_only);
    s.finish();
  }
  {
    auto s = top.child("advection");
    s.get("pad_seconds", c.advection.pad_seconds);
    s.get("gridded_delta", c.advection.gridded_delta);
    s.get("gridded_min_separation", c.advection.gridded_min_separation);
    s.get("max_empirical_speed_kmh", c.advection.max_empirical_speed_kmh);
    s.get("speed_cap_kmh", c.advection.speed_cap_kmh);
    s.get("fixed_eta", c.advection.fixed_eta);
    s.get("zero_missing_velocity", c.advection.zero_missing_velocity);
    s.finish();
  }
  {
    auto s = top.child("lags");
    s.get("kind", c.lags.kind);
    s.get("n_bins", c.lags.n_bins);
    s.get("max_tau", c.lags.max_tau);
    s.finish();
  }
  {
    auto s = top.child("inference");
    s.get("optimizer", c.inference.optimizer);
    s.get("wls_init", c.inference.wls_init);
    s.get("init", c.inference.init);
    s.get("jackknife", c.inference.jackknife);
    s.get("max_evaluations", c.inference.max_evaluations);
    s.finish();
  }
  {
    auto s = top.child("simulation");
    s.get("nx", c.simulation.nx);
    s.get("ny", c.simulation.ny);
    s.get("x0", c.simulation.x0);
    s.get("y0", c.simulation.y0);
    s.get("pixel", c.simulation.pixel);
    s.get("n_steps", c.simulation.n_steps);
    s.get("n_episodes", c.simulation.n_episodes);
    s.get("conditioning_pixel", c.simulation.conditioning_pixel);
    s.get("fixed_velocity_kmh", c.simulation.fixed_velocity_kmh);
    s.get("correct_discretization", c.simulation.correct_discretization);
    s.get("replay_replicates", c.simulation.replay_replicates);
    s.get("site_margins", c.simulation.site_margins);
    s.finish();
  }
  {
    auto s = top.child("diagnostics");
    s.get("n_bootstrap", c.diagnostics.n_bootstrap);
    s.get("qq_grid", c.diagnostics.qq_grid);
    s.get("conditioning_site", c.diagnostics.conditioning_site);
    s.finish();
  }
  {
    auto s = top.child("validation");
    s.get("truth", c.validation.truth);
    s.get("fix_advection", c.validation.fix_advection);
    s.get("n_fits", c.validation.n_fits);
    s.get("n_episodes", c.validation.n_episodes);
    s.get("n_steps", c.validation.n_steps);
    s.get("grid_side", c.validation.grid_side);
    s.get("spacing", c.validation.spacing);
    s.get("min_speed", c.validation.min_speed);
    s.get("max_speed", c.validation.max_speed);
    s.finish();
  }
  top.finish();

  c.data.sites = resolve(c.data.sites, base_dir);
  c.data.gauges = resolve(c.data.gauges, base_dir);
  c.data.gridded = resolve(c.data.gridded, base_dir);
  validate(c);
  return c;
}

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(apply_overrides(ss.str(), overrides), std::filesystem::path(path).parent_path().string());
}

std::string apply_overrides(const std::string& yaml, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return yaml;
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    YAML::Node value;
    try {
      value = YAML::Load(o.substr(eq + 1));
    } catch (const YAML::Exception&) {
      throw ConfigError("override '" + o + "' has an invalid value");
    }
    std::vector<std::string> parts;
    for (std::size_t b = 0, e; b <= key.size(); b = e + 1) {
      e = key.find('.', b);
      if (e == std::string::npos) e = key.size();
      parts.push_back(key.substr(b, e - b));
    }
    // yaml-cpp nodes are handles: walk down by reassigning copies.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = chain.back()[parts[i]];
      if (!next.IsDefined() || next.IsNull()) {
        chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
        next = chain.back()[parts[i]];
      }
      chain.push_back(next);
    }
    chain.back()[parts.back()] = value;
  }
  YAML::Emitter out;
  out << root;
  return out.c_str();
}

void validate(const PipelineConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.threads >= 1, "threads must be at least 1");
  require(c.data.dataset == "gauges" || c.data.dataset == "gridded", "data.dataset must be 'gauges' or 'gridded'");
  require(c.data.step_seconds > 0 && c.data.gridded_step_seconds > 0, "step lengths must be positive");
  require(c.margins.precision > 0.0, "margins.precision must be positive");
  require(!c.margins.censoring_candidates.empty(), "margins.censoring_candidates must not be empty");
  for (int m : c.margins.censoring_candidates) require(m >= 0, "censoring multipliers must be non-negative");
  require(!c.margins.censoring_multiplier || *c.margins.censoring_multiplier >= 0,
          "margins.censoring_multiplier must be non-negative");
  require(c.margins.pooling == "pooled" || c.margins.pooling == "averaged",
          "margins.pooling must be 'pooled' or 'averaged'");
  require(c.margins.min_positive >= 1, "margins.min_positive must be at least 1");
  require(c.episodes.q > 0.0 && c.episodes.q < 1.0, "episodes.q must lie in (0, 1)");
  require(c.episodes.delta >= 1, "episodes.delta must be at least 1 step");
  require(c.episodes.min_separation >= 0.0, "episodes.min_separation must be non-negative");
  require(c.advection.pad_seconds >= 0, "advection.pad_seconds must be non-negative");
  require(c.advection.gridded_delta >= 2, "advection.gridded_delta must be at least 2 steps");
  require(c.advection.gridded_min_separation >= 0.0, "advection.gridded_min_separation must be non-negative");
  require(c.advection.max_empirical_speed_kmh > 0.0, "advection.max_empirical_speed_kmh must be positive");
  require(c.advection.speed_cap_kmh > 0.0, "advection.speed_cap_kmh must be positive");
  if (c.advection.fixed_eta) {
    require((*c.advection.fixed_eta)[0] > 0.0 && (*c.advection.fixed_eta)[1] > 0.0, "fixed_eta must be positive");
  }
  require(c.lags.kind == "exact" || c.lags.kind == "equal_count", "lags.kind must be 'exact' or 'equal_count'");
  require(c.lags.n_bins >= 1, "lags.n_bins must be at least 1");
  require(c.lags.max_tau >= 0, "lags.max_tau must be non-negative");
  require(c.inference.optimizer == "nelder_mead" || c.inference.optimizer == "bfgs",
          "inference.optimizer must be 'nelder_mead' or 'bfgs'");
  for (double v : c.inference.init) require(v > 0.0, "inference.init values must be positive");
  require(c.inference.init[2] <= 2.0 && c.inference.init[3] <= 2.0, "inference.init alphas must lie in (0, 2]");
  require(c.inference.max_evaluations > 0, "inference.max_evaluations must be positive");
  require(c.simulation.nx >= 1 && c.simulation.ny >= 1, "simulation grid must have at least one pixel");
  require(c.simulation.pixel > 0.0, "simulation.pixel must be positive");
  require(c.simulation.n_steps >= 1, "simulation.n_steps must be at least 1");
  require(c.simulation.replay_replicates >= 0, "simulation.replay_replicates must be non-negative");
  require(!c.simulation.conditioning_pixel || *c.simulation.conditioning_pixel < c.simulation.nx * c.simulation.ny,
          "simulation.conditioning_pixel outside the grid");
  require(c.diagnostics.n_bootstrap >= 0, "diagnostics.n_bootstrap must be non-negative");
  require(c.diagnostics.qq_grid >= 1, "diagnostics.qq_grid must be at least 1");
  for (double v : c.validation.truth) require(v > 0.0, "validation.truth values must be positive");
  require(c.validation.truth[2] <= 2.0 && c.validation.truth[3] <= 2.0, "validation.truth alphas must lie in (0, 2]");
  require(c.validation.n_fits >= 1 && c.validation.n_episodes >= 1, "validation needs at least one fit and episode");
  require(c.validation.n_steps >= 1 && c.validation.grid_side >= 2, "validation grid too small");
  require(c.validation.spacing > 0.0, "validation.spacing must be positive");
  require(c.validation.min_speed >= 0.0 && c.validation.max_speed >= c.validation.min_speed,
          "validation speed range is empty");
}

std::string to_yaml(const PipelineConfig& c) {
  YAML::Emitter out;
  auto key = [&](const char* k) -> YAML::Emitter& { return out << YAML::Key << k << YAML::Value; };
  auto real = [&](const char* k, double v) { key(k) << num(v); };
  auto reals = [&](const char* k, const auto& seq) {
    key(k) << YAML::Flow << YAML::BeginSeq;
    for (double v : seq) out << num(v);
    out << YAML::EndSeq;
  };
  auto null = [&](const char* k) { key(k) << YAML::Null; };

  out << YAML::BeginMap;
  key("seed") << c.seed;
  key("threads") << c.threads;
  key("output") << c.output;

  key("data") << YAML::BeginMap;
  key("sites") << c.data.sites;
  key("gauges") << c.data.gauges;
  key("gridded") << c.data.gridded;
  key("dataset") << c.data.dataset;
  key("step_seconds") << c.data.step_seconds;
  key("gridded_step_seconds") << c.data.gridded_step_seconds;
  out << YAML::EndMap;

  key("margins") << YAML::BeginMap;
  real("precision", c.margins.precision);
  key("censoring_candidates") << YAML::Flow << c.margins.censoring_candidates;
  if (c.margins.censoring_multiplier) key("censoring_multiplier") << *c.margins.censoring_multiplier;
  else null("censoring_multiplier");
  key("pooling") << c.margins.pooling;
  key("min_positive") << c.margins.min_positive;
  out << YAML::EndMap;

  key("episodes") << YAML::BeginMap;
  real("q", c.episodes.q);
  key("delta") << c.episodes.delta;
  real("min_separation", c.episodes.min_separation);
  if (c.episodes.max_episodes) key("max_episodes") << *c.episodes.max_episodes;
  else null("max_episodes");
  key("positive_only") << c.episodes.positive_only;
  out << YAML::EndMap;

  key("advection") << YAML::BeginMap;
  key("pad_seconds") << c.advection.pad_seconds;
  key("gridded_delta") << c.advection.gridded_delta;
  real("gridded_min_separation", c.advection.gridded_min_separation);
  real("max_empirical_speed_kmh", c.advection.max_empirical_speed_kmh);
  real("speed_cap_kmh", c.advection.speed_cap_kmh);
  if (c.advection.fixed_eta) reals("fixed_eta", *c.advection.fixed_eta);
  else null("fixed_eta");
  key("zero_missing_velocity") << c.advection.zero_missing_velocity;
  out << YAML::EndMap;

  key("lags") << YAML::BeginMap;
  key("kind") << c.lags.kind;
  key("n_bins") << c.lags.n_bins;
  key("max_tau") << c.lags.max_tau;
  out << YAML::EndMap;

  key("inference") << YAML::BeginMap;
  key("optimizer") << c.inference.optimizer;
  key("wls_init") << c.inference.wls_init;
  reals("init", c.inference.init);
  key("jackknife") << c.inference.jackknife;
  key("max_evaluations") << c.inference.max_evaluations;
  out << YAML::EndMap;

  key("simulation") << YAML::BeginMap;
  key("nx") << c.simulation.nx;
  key("ny") << c.simulation.ny;
  real("x0", c.simulation.x0);
  real("y0", c.simulation.y0);
  real("pixel", c.simulation.pixel);
  key("n_steps") << c.simulation.n_steps;
  key("n_episodes") << c.simulation.n_episodes;
  if (c.simulation.conditioning_pixel) key("conditioning_pixel") << *c.simulation.conditioning_pixel;
  else null("conditioning_pixel");
  if (c.simulation.fixed_velocity_kmh) reals("fixed_velocity_kmh", *c.simulation.fixed_velocity_kmh);
  else null("fixed_velocity_kmh");
  key("correct_discretization") << c.simulation.correct_discretization;
  key("replay_replicates") << c.simulation.replay_replicates;
  key("site_margins") << c.simulation.site_margins;
  out << YAML::EndMap;

  key("diagnostics") << YAML::BeginMap;
  key("n_bootstrap") << c.diagnostics.n_bootstrap;
  key("qq_grid") << c.diagnostics.qq_grid;
  key("conditioning_site") << c.diagnostics.conditioning_site;
  out << YAML::EndMap;

  key("validation") << YAML::BeginMap;
  reals("truth", c.validation.truth);
  key("fix_advection") << c.validation.fix_advection;
  key("n_fits") << c.validation.n_fits;
  key("n_episodes") << c.validation.n_episodes;
  key("n_steps") << c.validation.n_steps;
  key("grid_side") << c.validation.grid_side;
  real("spacing", c.validation.spacing);
  real("min_speed", c.validation.min_speed);
  real("max_speed", c.validation.max_speed);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace stormgen::cli
