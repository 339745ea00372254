#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mpf/scenarios.hpp"

namespace mpf {

struct RunRequest {
  std::string scenario_path;
  std::vector<std::string> estimators;  // empty = all
  int trials = 20;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
  bool write_trial_traces = true;
};

// Runs an experiment and writes experiment.csv, per-trial traces, a timing
// table, and manifest.json into the output directory. Returns a process exit
// code (0 on success, 2 on bad input).
int cmd_run(const RunRequest& request, std::ostream& log);

// Writes one plane of a scenario's distance field as CSV. index -1 picks the
// middle plane.
int cmd_sdf_slice(const std::string& scenario_path, const std::string& axis, int index,
                  const std::string& out_path, std::ostream& log);

// Prints every validation problem, or the resolved parameters when valid.
int cmd_validate(const std::string& scenario_path, std::ostream& log);

}  // namespace mpf
