// Experiment driver: single solves, tradeoff sweeps over the rate weight,
// user-count sweeps and convergence traces, all emitted as CSV.

#include <CLI11.hpp>
#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "isacbeam/errors.hpp"
#include "isacbeam/experiment.hpp"
#include "isacbeam/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + v.size() / 2;
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace isacbeam;

  CLI::App app{std::string(kToolName) + " " + kToolVersion +
               " - ISAC beamforming tradeoff experiments"};
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> out_path, trace_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "flat key = value configuration file");
    sub->add_option("--set", overrides, "override, e.g. --set delta=0.1")->take_all();
    sub->add_option("--out", out_path, "result CSV path");
    sub->add_option("--trace", trace_path, "convergence trace CSV path (trace mode)");
    sub->add_option("--seed", seed, "base channel seed");
    sub->add_option("--jobs", jobs, "parallel solver threads");
  };

  CLI::App* sub_single = app.add_subcommand("single", "solve the base configuration");
  CLI::App* sub_sd = app.add_subcommand("sweep-delta", "sweep the rate/sensing weight");
  CLI::App* sub_sk = app.add_subcommand("sweep-k", "sweep the number of users");
  CLI::App* sub_trace = app.add_subcommand("trace", "one solve with per-iteration curves");
  for (CLI::App* sub : {sub_single, sub_sd, sub_sk, sub_trace}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    experiment::ExperimentSpec spec = experiment::parse_config(config_file, overrides);
    spec.mode = app.get_subcommands().front()->get_name();
    if (out_path) spec.out_path = *out_path;
    if (trace_path) spec.trace_path = *trace_path;
    if (seed) spec.base.seed = *seed;
    if (jobs) {
      if (*jobs < 1) throw ConfigError("--jobs must be >= 1");
      spec.jobs = *jobs;
    }
    if (spec.mode == "trace" && spec.trace_path.empty())
      throw ConfigError("trace mode needs --trace PATH (or trace = PATH in the config)");

    const experiment::ExperimentResult result = experiment::run_experiment(spec);
    experiment::write_csv(result.rows, spec.out_path, spec);
    if (result.has_trace) experiment::emit_trace(result.first_trace, spec.trace_path);

    std::vector<double> runtimes;
    long converged = 0;
    for (const auto& r : result.rows) {
      runtimes.push_back(r.runtime_ms);
      converged += r.converged ? 1 : 0;
    }
    std::cout << spec.mode << ": " << result.rows.size() << " rows -> " << spec.out_path
              << " (" << converged << " converged, median solve "
              << median(std::move(runtimes)) << " ms)\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
