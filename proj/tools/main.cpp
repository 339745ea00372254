#include <iostream>

#include <CLI11.hpp>

#include "mpf/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"manifold particle filtering for articulated robots"};
  app.require_subcommand(1);

  mpf::RunRequest request;
  CLI::App* run = app.add_subcommand("run", "run an experiment and write CSV reports");
  run->add_option("--scenario", request.scenario_path, "scenario JSON file")->required();
  run->add_option("--estimators", request.estimators,
                  "estimators to run (default: all)")
      ->delimiter(',');
  run->add_option("--trials", request.trials, "number of independent trials");
  run->add_option("--seed", request.seed, "base random seed");
  run->add_option("--out", request.out_dir, "output directory");
  run->add_option("--workers", request.workers, "worker threads (trials are distributed)");
  run->add_flag("!--no-trial-traces", request.write_trial_traces,
                "skip writing per-trial CSV traces");

  std::string slice_scenario, slice_axis = "z", slice_out = "slice.csv";
  int slice_index = -1;
  CLI::App* slice = app.add_subcommand("sdf-slice", "export one plane of the distance field");
  slice->add_option("--scenario", slice_scenario, "scenario JSON file")->required();
  slice->add_option("--axis", slice_axis, "slice axis: x, y, or z");
  slice->add_option("--index", slice_index, "plane index (default: middle)");
  slice->add_option("--out", slice_out, "output CSV file");

  std::string validate_scenario;
  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", validate_scenario, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return mpf::cmd_run(request, std::cout);
  if (slice->parsed()) {
    return mpf::cmd_sdf_slice(slice_scenario, slice_axis, slice_index, slice_out, std::cout);
  }
  return mpf::cmd_validate(validate_scenario, std::cout);
}
