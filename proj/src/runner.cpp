#include "mpf/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "mpf/config.hpp"

namespace mpf {
namespace {

namespace fs = std::filesystem;

bool write_file(const fs::path& path, const std::string& content, std::ostream& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    log << "error: cannot write " << path.string() << "\n";
    return false;
  }
  out << content;
  return true;
}

}  // namespace

int cmd_run(const RunRequest& request, std::ostream& log) {
  std::vector<FilterKind> kinds;
  std::vector<std::string> names =
      request.estimators.empty() ? filter_kind_names() : request.estimators;
  for (const std::string& name : names) {
    const auto kind = parse_filter_kind(name);
    if (!kind) {
      log << "error: unknown estimator '" << name << "'; valid estimators:";
      for (const std::string& valid : filter_kind_names()) log << " " << valid;
      log << "\n";
      return 2;
    }
    kinds.push_back(*kind);
  }
  if (request.trials < 1) {
    log << "error: --trials must be >= 1\n";
    return 2;
  }

  Scenario scenario;
  try {
    scenario = load_scenario(request.scenario_path);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }

  log << "scenario " << scenario.name << ": " << scenario.script.size() << " steps, "
      << request.trials << " trial(s), seed " << request.seed << "\n";
  const ExperimentReport report =
      run_experiment(scenario, kinds, request.trials, request.seed, request.workers);

  std::error_code ec;
  fs::create_directories(request.out_dir, ec);
  if (ec) {
    log << "error: cannot create " << request.out_dir << ": " << ec.message() << "\n";
    return 2;
  }
  const fs::path out_dir(request.out_dir);
  if (!write_file(out_dir / "experiment.csv", experiment_csv(report), log)) return 2;
  if (request.write_trial_traces) {
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "trial_%03zu.csv", i);
      if (!write_file(out_dir / name, trial_csv(report.trials[i]), log)) return 2;
    }
  }
  if (!write_file(out_dir / "timing.txt", report.timing_table(), log)) return 2;
  if (!write_file(out_dir / "manifest.json",
                  manifest_json(request.scenario_path, names, request.trials, request.seed), log)) {
    return 2;
  }

  for (std::size_t e = 0; e < report.estimator_names.size(); ++e) {
    const auto& series = report.per_timestep[e];
    log << "  " << report.estimator_names[e] << ": final mean W-RMSE "
        << series.back().mean_wrmse << " rad, underflow events " << report.underflow_events(e)
        << "\n";
  }
  log << report.timing_table();
  log << "wrote " << (out_dir / "experiment.csv").string() << "\n";
  return 0;
}

int cmd_sdf_slice(const std::string& scenario_path, const std::string& axis, int index,
                  const std::string& out_path, std::ostream& log) {
  int axis_index;
  if (axis == "x") {
    axis_index = 0;
  } else if (axis == "y") {
    axis_index = 1;
  } else if (axis == "z") {
    axis_index = 2;
  } else {
    log << "error: --axis must be x, y, or z\n";
    return 2;
  }

  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  const SdfGrid& sdf = scenario.world.sdf;
  if (index < 0) index = sdf.dims[axis_index] / 2;

  SdfSlice slice;
  try {
    slice = extract_slice(sdf, axis_index, index);
  } catch (const std::out_of_range& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }

  std::string csv;
  char buf[40];
  for (int r = 0; r < slice.rows; ++r) {
    for (int c = 0; c < slice.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", slice.values[static_cast<std::size_t>(r) * slice.cols + c]);
      if (c > 0) csv += ',';
      csv += buf;
    }
    csv += '\n';
  }
  if (!write_file(out_path, csv, log)) return 2;
  log << "wrote " << out_path << " (" << slice.rows << " x " << slice.cols << ", axis " << axis
      << " index " << index << ")\n";
  return 0;
}

int cmd_validate(const std::string& scenario_path, std::ostream& log) {
  const std::vector<std::string> errors = validate_scenario_file(scenario_path);
  if (!errors.empty()) {
    log << scenario_path << " is invalid:\n";
    for (const std::string& e : errors) log << "  " << e << "\n";
    return 2;
  }
  const Scenario scenario = load_scenario(scenario_path);
  log << scenario_path << " is valid\n" << describe_scenario(scenario);
  return 0;
}

}  // namespace mpf
