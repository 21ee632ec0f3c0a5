#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "config.hpp"
#include "stormgen/errors.hpp"
#include "stormgen/inference.hpp"

namespace stormgen::cli {

/// An upstream stage has not been run yet.
class MissingArtifact : public DataError {
 public:
  MissingArtifact(const std::filesystem::path& file, const std::string& command)
      : DataError("missing '" + file.string() + "': run `stormgen " + command + "` first") {}
};

/// Time and distance units of a dataset: native parameters use meters and
/// steps, reported ones kilometers and hours.
struct Units {
  std::int64_t step_seconds = 300;

  double steps_per_hour() const { return 3600.0 / static_cast<double>(step_seconds); }
  /// km/h -> meters per step.
  double speed_to_native(double kmh) const { return kmh * 1000.0 / steps_per_hour(); }
  double speed_to_kmh(double native) const { return native * steps_per_hour() / 1000.0; }
};

ExtendedParams params_to_native(const std::array<double, 6>& kmh, const Units& u);
std::array<double, 6> params_to_kmh(const ExtendedParams& native, const Units& u);

void cmd_fit_margins(const PipelineConfig& c);
void cmd_select_episodes(const PipelineConfig& c);
void cmd_estimate_advection(const PipelineConfig& c);
void cmd_fit_variogram(const PipelineConfig& c);
void cmd_simulate(const PipelineConfig& c);
void cmd_diagnose(const PipelineConfig& c);
void cmd_validate_recovery(const PipelineConfig& c);

/// Same-schema synthetic dataset (sites, 5-minute gauges, hourly gridded
/// field) plus a config pointing at it.
struct SynthOptions {
  std::size_t n_sites = 12;
  int n_days = 100;
  std::size_t n_storms = 60;
};
void cmd_synth_data(const PipelineConfig& c, const SynthOptions& opt, const std::string& dir);

}  // namespace stormgen::cli
