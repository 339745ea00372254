#include "mpf/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mpf {
namespace {

// Stream tags for deriving independent generators from one seed.
constexpr std::uint64_t kTruthStream = 0;
constexpr std::uint64_t kEstimatorStreamBase = 1;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

FilterModels Scenario::models() const {
  FilterModels m;
  m.world = &world;
  m.transition = transition;
  m.prior = prior;
  m.observed = observed;
  m.contact_scale = contact_scale;
  m.kde = kde;
  m.projection = projection;
  m.resample = resample;
  m.inactive_factor_on_contact = inactive_factor_on_contact;
  return m;
}

Config Scenario::masked_encoder(const Config& q_e) const {
  Config masked = q_e;
  for (int d = 0; d < static_cast<int>(observed.size()); ++d) {
    if (!observed[d]) masked[d] = 0.0;
  }
  return masked;
}

TruthState init_truth(const Scenario& scenario, std::mt19937_64& rng) {
  const int dim = scenario.joint_count();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  Config offset(dim);
  for (int d = 0; d < dim; ++d) {
    offset[d] = scenario.observed[d] ? gauss(rng) * std::sqrt(scenario.prior.variance[d])
                                     : sym(rng) * scenario.prior.unobserved_half_width;
  }
  TruthState truth;
  truth.q_e = scenario.start_configuration;
  truth.q_true = resolve_collision(scenario.world, truth.q_e + offset);
  return truth;
}

TruthState step_truth(const TruthState& truth, const Config& u, const Scenario& scenario,
                      std::mt19937_64& rng) {
  const int dim = scenario.joint_count();
  const Config u_noisy =
      u + uniform_ball(dim, scenario.transition.velocity_noise_radius, rng);
  TruthState next;
  next.q_e = truth.q_e + u * scenario.transition.dt;
  next.q_true = resolve_collision(scenario.world, truth.q_true + u_noisy * scenario.transition.dt);
  return next;
}

Observation observe(const TruthState& truth, const Scenario& scenario) {
  Observation obs;
  obs.encoder = scenario.masked_encoder(truth.q_e);
  obs.observed = scenario.observed;
  obs.contact.bits.resize(scenario.world.sensors.size());
  const std::vector<Pose> poses = forward_kinematics(scenario.world.chain, truth.q_true);
  for (std::size_t i = 0; i < scenario.world.sensors.size(); ++i) {
    const SensorSpec& sensor = scenario.world.sensors[i];
    const SdfSample sample = sample_distance(scenario.world.sdf, sensor_center(poses, sensor));
    obs.contact.bits[i] = (sample.value - sensor.radius) <= scenario.contact_threshold ? 1 : 0;
  }
  return obs;
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::cpf: return "cpf";
    case FilterKind::mpf_uniform: return "mpf-uniform";
    case FilterKind::mpf_particle: return "mpf-particle";
    case FilterKind::mpf_ball: return "mpf-ball";
  }
  return "unknown";
}

std::optional<FilterKind> parse_filter_kind(const std::string& name) {
  for (FilterKind kind : {FilterKind::cpf, FilterKind::mpf_uniform, FilterKind::mpf_particle,
                          FilterKind::mpf_ball}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const std::vector<std::string>& filter_kind_names() {
  static const std::vector<std::string> names = {"cpf", "mpf-uniform", "mpf-particle", "mpf-ball"};
  return names;
}

namespace {

class ParticleFilterEstimator final : public Estimator {
 public:
  explicit ParticleFilterEstimator(FilterKind kind) : kind_(kind) {}

  std::string name() const override { return to_string(kind_); }

  void initialize(const Scenario& scenario, std::mt19937_64& rng) override {
    models_ = scenario.models();
    belief_ = init_belief(models_, scenario.particle_count, rng);
  }

  StepDiagnostics step(const Config& u, const Config& q_e_prev, const Observation& observation,
                       std::mt19937_64& rng) override {
    StepDiagnostics diag;
    switch (kind_) {
      case FilterKind::cpf:
        belief_ = cpf_step(belief_, u, observation, models_, rng, &diag);
        break;
      case FilterKind::mpf_uniform:
        belief_ = mpf_step(belief_, u, q_e_prev, observation, ManifoldStrategy::uniform, models_,
                           rng, &diag);
        break;
      case FilterKind::mpf_particle:
        belief_ = mpf_step(belief_, u, q_e_prev, observation, ManifoldStrategy::particle, models_,
                           rng, &diag);
        break;
      case FilterKind::mpf_ball:
        belief_ = mpf_step(belief_, u, q_e_prev, observation, ManifoldStrategy::ball, models_,
                           rng, &diag);
        break;
    }
    return diag;
  }

  const ParticleSet& belief() const override { return belief_; }

 private:
  FilterKind kind_;
  FilterModels models_;
  ParticleSet belief_;
};

}  // namespace

std::unique_ptr<Estimator> make_estimator(FilterKind kind) {
  return std::make_unique<ParticleFilterEstimator>(kind);
}

bool TrialTrace::any_contact() const {
  return std::any_of(contact.begin(), contact.end(), [](std::uint8_t c) { return c != 0; });
}

std::optional<double> TrialTrace::contact_mean_wrmse(int estimator) const {
  double sum = 0.0;
  int n = 0;
  for (int t = 0; t < timestep_count(); ++t) {
    if (!contact[t]) continue;
    sum += records[estimator][t].wrmse;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

double TrialTrace::final_wrmse(int estimator) const {
  if (records[estimator].empty()) throw std::logic_error("final_wrmse: empty trace");
  return records[estimator].back().wrmse;
}

TrialTrace run_trial(const Scenario& scenario, const std::vector<Estimator*>& estimators,
                     std::uint64_t seed, std::uint64_t trial_index, const TruthObserver& observer) {
  std::mt19937_64 truth_rng = make_rng(seed, kTruthStream, trial_index);
  std::vector<std::mt19937_64> estimator_rngs;
  estimator_rngs.reserve(estimators.size());
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    estimator_rngs.push_back(make_rng(seed, kEstimatorStreamBase + i, trial_index));
  }

  TruthState truth = init_truth(scenario, truth_rng);
  TrialTrace trace;
  trace.estimator_names.reserve(estimators.size());
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    estimators[i]->initialize(scenario, estimator_rngs[i]);
    trace.estimator_names.push_back(estimators[i]->name());
  }
  trace.records.resize(estimators.size());

  const int steps = static_cast<int>(scenario.script.size());
  trace.contact.reserve(steps);
  for (auto& r : trace.records) r.reserve(steps);

  Config q_e_prev = scenario.masked_encoder(scenario.start_configuration);
  for (int t = 0; t < steps; ++t) {
    const Config& u = scenario.script[t];
    truth = step_truth(truth, u, scenario, truth_rng);
    const Observation obs = observe(truth, scenario);
    trace.contact.push_back(obs.contact.any() ? 1 : 0);
    if (observer) observer(t, truth);

    for (std::size_t i = 0; i < estimators.size(); ++i) {
      StepRecord record;
      record.diagnostics = estimators[i]->step(u, q_e_prev, obs, estimator_rngs[i]);
      record.wrmse = w_rmse(estimators[i]->belief(), truth.q_true, obs.encoder);
      trace.records[i].push_back(record);
    }
    q_e_prev = obs.encoder;
  }
  return trace;
}

TrialTrace run_trial(const Scenario& scenario, const std::vector<FilterKind>& kinds,
                     std::uint64_t seed, std::uint64_t trial_index) {
  std::vector<std::unique_ptr<Estimator>> owned;
  std::vector<Estimator*> raw;
  for (FilterKind kind : kinds) {
    owned.push_back(make_estimator(kind));
    raw.push_back(owned.back().get());
  }
  return run_trial(scenario, raw, seed, trial_index);
}

int ExperimentReport::underflow_events(int estimator) const {
  int events = 0;
  for (const TrialTrace& trace : trials) {
    for (const StepRecord& record : trace.records[estimator]) {
      if (record.diagnostics.weight_underflow) ++events;
    }
  }
  return events;
}

namespace {

struct RunningStats {
  std::vector<double> values;

  void add(double v) { values.push_back(v); }
  double mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  }
  double stddev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / (values.size() - 1));
  }
  double median() {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
};

}  // namespace

ExperimentReport run_experiment(const Scenario& scenario, const std::vector<FilterKind>& kinds,
                                int n_trials, std::uint64_t base_seed, int workers) {
  if (n_trials < 1) throw std::invalid_argument("run_experiment: need at least one trial");
  ExperimentReport report;
  for (FilterKind kind : kinds) report.estimator_names.push_back(to_string(kind));
  report.trials.resize(n_trials);

  const int thread_count = std::max(1, std::min(workers, n_trials));
  if (thread_count == 1) {
    for (int trial = 0; trial < n_trials; ++trial) {
      report.trials[trial] = run_trial(scenario, kinds, base_seed, trial);
    }
  } else {
    std::atomic<int> next_trial{0};
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int w = 0; w < thread_count; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const int trial = next_trial.fetch_add(1);
          if (trial >= n_trials) return;
          report.trials[trial] = run_trial(scenario, kinds, base_seed, trial);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  const int steps = report.trials.front().timestep_count();
  const int n_estimators = static_cast<int>(kinds.size());
  report.per_timestep.assign(n_estimators, std::vector<TimestepStats>(steps));
  for (int e = 0; e < n_estimators; ++e) {
    for (int t = 0; t < steps; ++t) {
      RunningStats wrmse, transition, observation;
      int contacts = 0;
      for (const TrialTrace& trace : report.trials) {
        const StepRecord& record = trace.records[e][t];
        wrmse.add(record.wrmse);
        transition.add(record.diagnostics.transition_seconds * 1e3);
        observation.add(record.diagnostics.observation_seconds * 1e3);
        contacts += trace.contact[t] ? 1 : 0;
      }
      TimestepStats& stats = report.per_timestep[e][t];
      stats.mean_wrmse = wrmse.mean();
      const double half_width =
          n_trials > 1 ? 1.96 * wrmse.stddev() / std::sqrt(static_cast<double>(n_trials)) : 0.0;
      stats.ci_low = stats.mean_wrmse - half_width;
      stats.ci_high = stats.mean_wrmse + half_width;
      stats.contact_fraction = static_cast<double>(contacts) / n_trials;
      stats.transition_ms = transition.mean();
      stats.observation_ms = observation.mean();
    }
  }

  report.timing.resize(n_estimators);
  for (int e = 0; e < n_estimators; ++e) {
    RunningStats total, transition, observation;
    for (const TrialTrace& trace : report.trials) {
      for (int t = 0; t < steps; ++t) {
        if (!trace.contact[t]) continue;
        const StepDiagnostics& diag = trace.records[e][t].diagnostics;
        transition.add(diag.transition_seconds * 1e3);
        observation.add(diag.observation_seconds * 1e3);
        total.add((diag.transition_seconds + diag.observation_seconds) * 1e3);
      }
    }
    TimingSummary& summary = report.timing[e];
    summary.contact_steps = static_cast<int>(total.values.size());
    summary.total_mean_ms = total.mean();
    summary.total_std_ms = total.stddev();
    summary.transition_mean_ms = transition.mean();
    summary.transition_std_ms = transition.stddev();
    summary.observation_mean_ms = observation.mean();
    summary.observation_std_ms = observation.stddev();
    summary.total_median_ms = total.median();
  }
  return report;
}

std::string ExperimentReport::timing_table() const {
  std::ostringstream out;
  out << "timing over contact steps (ms)\n";
  out << "estimator      steps  total mean+/-std (median)   transition        observation\n";
  for (std::size_t e = 0; e < estimator_names.size(); ++e) {
    const TimingSummary& s = timing[e];
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %5d  %7.2f +/- %-7.2f (%7.2f)  %7.2f +/- %-7.2f %7.2f +/- %-7.2f\n",
                  estimator_names[e].c_str(), s.contact_steps, s.total_mean_ms, s.total_std_ms,
                  s.total_median_ms, s.transition_mean_ms, s.transition_std_ms,
                  s.observation_mean_ms, s.observation_std_ms);
    out << line;
  }
  return out.str();
}

std::string experiment_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "timestep,estimator,mean_wrmse,ci_low,ci_high,contact_fraction,transition_ms,observation_ms\n";
  for (std::size_t e = 0; e < report.estimator_names.size(); ++e) {
    for (std::size_t t = 0; t < report.per_timestep[e].size(); ++t) {
      const TimestepStats& s = report.per_timestep[e][t];
      out << t << ',' << report.estimator_names[e] << ',' << format_double(s.mean_wrmse) << ','
          << format_double(s.ci_low) << ',' << format_double(s.ci_high) << ','
          << format_double(s.contact_fraction) << ',' << format_double(s.transition_ms) << ','
          << format_double(s.observation_ms) << '\n';
    }
  }
  return out.str();
}

std::string trial_csv(const TrialTrace& trace) {
  std::ostringstream out;
  out << "timestep,contact";
  for (const std::string& name : trace.estimator_names) out << ',' << name << "_wrmse";
  out << '\n';
  for (int t = 0; t < trace.timestep_count(); ++t) {
    out << t << ',' << static_cast<int>(trace.contact[t]);
    for (std::size_t e = 0; e < trace.records.size(); ++e) {
      out << ',' << format_double(trace.records[e][t].wrmse);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mpf
