#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "stormgen/parallel.hpp"

using namespace stormgen;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNoConvergence = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal extreme rainfall generator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "YAML configuration file");
  app.add_option("--output", output, "Output directory (overrides the config)");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--threads", threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "Config override, e.g. episodes.q=0.9 (repeatable)");

  using Command = void (*)(const cli::PipelineConfig&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"fit-margins", "Fit the censored EGPD marginal model", cli::cmd_fit_margins},
      {"select-episodes", "Threshold the data and select extreme episodes", cli::cmd_select_episodes},
      {"estimate-advection", "Attach empirical velocities to episodes", cli::cmd_estimate_advection},
      {"fit-variogram", "Fit the variogram and advection parameters", cli::cmd_fit_variogram},
      {"simulate", "Simulate rainfall episodes", cli::cmd_simulate},
      {"diagnose", "Write diagnostic tables", cli::cmd_diagnose},
      {"validate-recovery", "Parameter recovery on simulated r-Pareto episodes", cli::cmd_validate_recovery},
  };
  Command selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&selected, fn = fn] { selected = fn; });
  }

  cli::SynthOptions synth;
  std::string synth_dir = "synthetic";
  bool run_synth = false;
  auto* sub = app.add_subcommand("synth-data", "Write a same-schema synthetic dataset and config");
  sub->add_option("--dir", synth_dir, "Destination directory");
  sub->add_option("--sites", synth.n_sites, "Number of gauges");
  sub->add_option("--days", synth.n_days, "Record length in days");
  sub->add_option("--storms", synth.n_storms, "Number of embedded storms");
  sub->callback([&] { run_synth = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    cli::PipelineConfig config;
    if (!config_path.empty()) {
      config = cli::load_config(config_path, overrides);
    } else if (!overrides.empty()) {
      config = cli::parse_config(cli::apply_overrides("{}", overrides));
    }
    if (!output.empty()) config.output = output;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    cli::validate(config);
    set_thread_count(static_cast<unsigned>(config.threads));

    if (run_synth) {
      cli::cmd_synth_data(config, synth, synth_dir);
    } else {
      selected(config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const FactorizationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NoVelocityError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
