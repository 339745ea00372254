#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpf/filters.hpp"

namespace mpf {

// A complete experiment definition: one robot/environment, one command
// script, and the filter parameters every estimator shares.
struct Scenario {
  std::string name;
  RobotWorld world;
  Config start_configuration;          // initial encoder reading
  std::vector<Config> script;          // one commanded velocity per timestep
  TransitionNoise transition;
  BeliefPrior prior;
  std::vector<std::uint8_t> observed;  // per-joint encoder availability
  double contact_scale = 0.01;         // sigma_c
  double contact_threshold = 0.005;    // surface distance at which a sensor reads contact
  int particle_count = 250;
  ProjectionSettings projection;
  KdeSettings kde;
  ResamplePolicy resample = ResamplePolicy::ess_half;
  bool inactive_factor_on_contact = true;

  int joint_count() const { return world.chain.joint_count(); }
  // Valid while this scenario stays alive.
  FilterModels models() const;
  Config masked_encoder(const Config& q_e) const;
};

struct TruthState {
  Config q_true;
  Config q_e;

  Config offset() const { return q_true - q_e; }
};

// Encoder start plus a prior offset draw, pushed out of any obstacle.
TruthState init_truth(const Scenario& scenario, std::mt19937_64& rng);

// Encoders integrate the command exactly; the true configuration integrates
// the command with uniform-ball velocity noise and is then pushed out of
// obstacles. Contact alters q_true but never q_e, so the offset absorbs every
// constraint interaction.
TruthState step_truth(const TruthState& truth, const Config& u, const Scenario& scenario,
                      std::mt19937_64& rng);

// Deterministic sensing of a true state: masked encoder reading plus binary
// contact bits (surface distance <= contact_threshold).
Observation observe(const TruthState& truth, const Scenario& scenario);

enum class FilterKind { cpf, mpf_uniform, mpf_particle, mpf_ball };

std::string to_string(FilterKind kind);
std::optional<FilterKind> parse_filter_kind(const std::string& name);
const std::vector<std::string>& filter_kind_names();

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual void initialize(const Scenario& scenario, std::mt19937_64& rng) = 0;
  virtual StepDiagnostics step(const Config& u, const Config& q_e_prev,
                               const Observation& observation, std::mt19937_64& rng) = 0;
  virtual const ParticleSet& belief() const = 0;
};

std::unique_ptr<Estimator> make_estimator(FilterKind kind);

struct StepRecord {
  double wrmse = 0.0;
  StepDiagnostics diagnostics;
};

struct TrialTrace {
  std::vector<std::string> estimator_names;
  std::vector<std::uint8_t> contact;              // truth contact per timestep
  std::vector<std::vector<StepRecord>> records;   // [estimator][timestep]

  int timestep_count() const { return static_cast<int>(contact.size()); }
  bool any_contact() const;
  // Mean W-RMSE of one estimator over the timesteps where truth had contact.
  // Empty optional when the trial never made contact.
  std::optional<double> contact_mean_wrmse(int estimator) const;
  double final_wrmse(int estimator) const;
};

using TruthObserver = std::function<void(int timestep, const TruthState& truth)>;

// Runs one trial: a fresh truth draw and one belief per estimator, all from
// streams of (seed, trial_index). Estimators see identical commands and
// observations but consume independent randomness.
TrialTrace run_trial(const Scenario& scenario, const std::vector<Estimator*>& estimators,
                     std::uint64_t seed, std::uint64_t trial_index = 0,
                     const TruthObserver& observer = {});
TrialTrace run_trial(const Scenario& scenario, const std::vector<FilterKind>& kinds,
                     std::uint64_t seed, std::uint64_t trial_index = 0);

struct TimestepStats {
  double mean_wrmse = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double contact_fraction = 0.0;
  double transition_ms = 0.0;
  double observation_ms = 0.0;
};

struct TimingSummary {
  int contact_steps = 0;
  double total_mean_ms = 0.0;
  double total_std_ms = 0.0;
  double total_median_ms = 0.0;
  double transition_mean_ms = 0.0;
  double transition_std_ms = 0.0;
  double observation_mean_ms = 0.0;
  double observation_std_ms = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> estimator_names;
  std::vector<std::vector<TimestepStats>> per_timestep;  // [estimator][timestep]
  std::vector<TimingSummary> timing;                     // contact steps only
  std::vector<TrialTrace> trials;

  int underflow_events(int estimator) const;
  std::string timing_table() const;
};

// n_trials independent trials with per-trial seeds derived from base_seed.
// workers > 1 distributes trials across threads; results are identical to the
// serial order either way.
ExperimentReport run_experiment(const Scenario& scenario, const std::vector<FilterKind>& kinds,
                                int n_trials, std::uint64_t base_seed, int workers = 1);

std::string experiment_csv(const ExperimentReport& report);
std::string trial_csv(const TrialTrace& trace);

}  // namespace mpf
