#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stormgen::cli {

struct DataConfig {
  std::string sites;    // gauge sites CSV
  std::string gauges;   // gauge observations CSV
  std::string gridded;  // gridded CSV or binary (.sgrd)
  /// Dataset the episodes and dependence model are built on: "gauges" or "gridded".
  std::string dataset = "gauges";
  std::int64_t step_seconds = 300;
  std::int64_t gridded_step_seconds = 3600;

  bool operator==(const DataConfig&) const = default;
};

struct MarginConfig {
  double precision = 0.2153;  // mm
  std::vector<int> censoring_candidates{1, 2, 3};
  std::optional<int> censoring_multiplier;  // unset: chosen by quantile RMSE
  std::string pooling = "pooled";              // or "averaged"
  int min_positive = 50;

  bool operator==(const MarginConfig&) const = default;
};

struct EpisodeSection {
  double q = 0.95;
  int delta = 12;
  double min_separation = 1200.0;
  std::optional<std::size_t> max_episodes;
  bool positive_only = true;

  bool operator==(const EpisodeSection&) const = default;
};

struct AdvectionSection {
  std::int64_t pad_seconds = 7200;
  /// Episode selection on the gridded dataset, used for velocity matching.
  int gridded_delta = 24;
  double gridded_min_separation = 5000.0;
  double max_empirical_speed_kmh = 5.6;
  double speed_cap_kmh = 150.0;
  std::optional<std::array<double, 2>> fixed_eta;  // (eta1, eta2) in km/h units
  bool zero_missing_velocity = false;

  bool operator==(const AdvectionSection&) const = default;
};

struct LagSection {
  std::string kind = "exact";  // or "equal_count"
  int n_bins = 10;
  int max_tau = 10;

  bool operator==(const LagSection&) const = default;
};

struct InferenceSection {
  std::string optimizer = "nelder_mead";  // or "bfgs"
  bool wls_init = true;
  /// Starting values (beta1, beta2, alpha1, alpha2, eta1, eta2) in km and km/h
  /// units; also the fallback when the WLS initializer fails.
  std::array<double, 6> init{0.3, 0.6, 0.3, 0.8, 1.6, 5.2};
  bool jackknife = true;
  int max_evaluations = 20000;

  bool operator==(const InferenceSection&) const = default;
};

struct SimulationSection {
  std::size_t nx = 20;
  std::size_t ny = 20;
  double x0 = 0.0;
  double y0 = 0.0;
  double pixel = 100.0;
  int n_steps = 12;
  std::size_t n_episodes = 10;
  std::optional<std::size_t> conditioning_pixel;
  /// Effective velocity in km/h; unset resamples the observed empirical
  /// velocities and applies the fitted transform.
  std::optional<std::array<double, 2>> fixed_velocity_kmh;
  bool correct_discretization = true;
  /// Simulated replicates per observed episode at the observation sites (0 disables).
  int replay_replicates = 1;
  bool site_margins = true;

  bool operator==(const SimulationSection&) const = default;
};

struct DiagnosticsSection {
  int n_bootstrap = 500;
  int qq_grid = 100;
  /// Site for the trivariate tables; the most frequent conditioning site when empty.
  std::string conditioning_site;

  bool operator==(const DiagnosticsSection&) const = default;
};

struct ValidationSection {
  std::array<double, 6> truth{0.3, 0.6, 0.3, 0.8, 1.6, 5.2};
  bool fix_advection = false;
  std::size_t n_fits = 10;
  std::size_t n_episodes = 200;
  int n_steps = 24;
  std::size_t grid_side = 7;
  double spacing = 1.0;
  double min_speed = 0.5;  // grid units per step
  double max_speed = 1.5;

  bool operator==(const ValidationSection&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string output = "stormgen-out";
  DataConfig data;
  MarginConfig margins;
  EpisodeSection episodes;
  AdvectionSection advection;
  LagSection lags;
  InferenceSection inference;
  SimulationSection simulation;
  DiagnosticsSection diagnostics;
  ValidationSection validation;

  bool operator==(const PipelineConfig&) const = default;
};

/// Parses a YAML document. Missing keys keep their defaults; unknown keys and
/// invalid values throw ConfigError. Relative data paths are resolved against
/// `base_dir` when it is non-empty.
PipelineConfig parse_config(const std::string& yaml, const std::string& base_dir = {});
PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
/// Applies `section.key=value` assignments (value parsed as YAML) to a document.
std::string apply_overrides(const std::string& yaml, const std::vector<std::string>& overrides);
std::string to_yaml(const PipelineConfig& c);
void validate(const PipelineConfig& c);

}  // namespace stormgen::cli
