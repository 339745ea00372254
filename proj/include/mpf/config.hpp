#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpf/scenarios.hpp"

namespace mpf {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses, validates, and builds a scenario (including its distance field).
// Relative paths inside the file (the command script) resolve against the
// file's directory. Throws ConfigError listing every problem found.
Scenario load_scenario(const std::filesystem::path& path);

// Validation-only pass: returns all problems, empty when the file is valid.
std::vector<std::string> validate_scenario_file(const std::filesystem::path& path);

// Human-readable table of the resolved parameters of a loaded scenario.
std::string describe_scenario(const Scenario& scenario);

// Whitespace-separated velocity rows, one timestep per line; '#' starts a
// comment. Every row must have exactly `dim` entries.
std::vector<Config> load_script(const std::filesystem::path& path, int dim);

std::uint64_t fnv1a_hash(const std::string& bytes);
std::string file_bytes(const std::filesystem::path& path);

// Reproducibility record written next to experiment outputs.
std::string manifest_json(const std::filesystem::path& scenario_path,
                          const std::vector<std::string>& estimators, int trials,
                          std::uint64_t seed);

}  // namespace mpf
