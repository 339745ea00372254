#include "mpf/contact_manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace mpf {
namespace {

// Shared scratch for repeated loss/gradient evaluations on one problem.
struct Evaluator {
  const ManifoldProblem& problem;
  std::vector<int> active;
  std::vector<Pose> poses;
  Eigen::Matrix3Xd jacobian;

  Evaluator(const ManifoldProblem& problem_, const ContactVector& contact) : problem(problem_) {
    if (contact.size() != static_cast<int>(problem.sensors->size())) {
      throw std::invalid_argument("contact vector size does not match sensor count");
    }
    for (int i = 0; i < contact.size(); ++i) {
      if (contact.bits[i]) active.push_back(i);
    }
  }

  double loss(const Config& q, bool* out_of_workspace) {
    forward_kinematics(*problem.chain, q, poses);
    double sum = 0.0;
    for (int i : active) {
      const SensorSpec& sensor = (*problem.sensors)[i];
      const SdfSample sample = sample_distance(*problem.sdf, sensor_center(poses, sensor));
      if (sample.out_of_bounds && out_of_workspace != nullptr) *out_of_workspace = true;
      const double d = sample.value - sensor.radius;
      sum += d * d;
    }
    return sum;
  }

  // Loss gradient at the configuration of the last loss() call.
  void gradient_at_cached_poses(const Config& q, Config& grad, bool* out_of_workspace) {
    grad.setZero(q.size());
    for (int i : active) {
      const SensorSpec& sensor = (*problem.sensors)[i];
      const Vec3 center = sensor_center(poses, sensor);
      const SdfSample sample = sample_distance(*problem.sdf, center);
      const GradientSample slope = sample_gradient(*problem.sdf, center);
      if ((sample.out_of_bounds || slope.out_of_bounds) && out_of_workspace != nullptr) {
        *out_of_workspace = true;
      }
      linear_jacobian(*problem.chain, poses, sensor, jacobian);
      grad.noalias() += 2.0 * (sample.value - sensor.radius) * (jacobian.transpose() * slope.gradient);
    }
  }
};

}  // namespace

double contact_loss(const ManifoldProblem& problem, const Config& q, const ContactVector& contact,
                    bool* out_of_workspace) {
  Evaluator eval(problem, contact);
  return eval.loss(q, out_of_workspace);
}

Config contact_loss_gradient(const ManifoldProblem& problem, const Config& q,
                             const ContactVector& contact, bool* out_of_workspace) {
  Evaluator eval(problem, contact);
  eval.loss(q, out_of_workspace);
  Config grad;
  eval.gradient_at_cached_poses(q, grad, out_of_workspace);
  return grad;
}

ProjectionOutcome project_to_manifold(const ManifoldProblem& problem, const Config& q_init,
                                      const ContactVector& contact,
                                      const ProjectionSettings& settings) {
  Evaluator eval(problem, contact);
  ProjectionOutcome outcome;
  outcome.q = problem.chain->clamp_to_limits(q_init);

  bool out_of_workspace = false;
  double loss = eval.loss(outcome.q, &out_of_workspace);
  if (out_of_workspace) {
    outcome.failure = ProjectionFailure::out_of_workspace;
    outcome.residual = loss;
    return outcome;
  }
  if (loss < settings.manifold_tolerance) {
    outcome.converged = true;
    outcome.residual = loss;
    return outcome;
  }

  Config grad(outcome.q.size());
  Config candidate(outcome.q.size());
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    eval.gradient_at_cached_poses(outcome.q, grad, nullptr);

    double step = settings.learning_rate;
    bool accepted = false;
    bool candidate_left_workspace = false;
    double candidate_loss = 0.0;
    for (int b = 0; b <= settings.max_backtracks; ++b) {
      candidate = problem.chain->clamp_to_limits(outcome.q - step * grad);
      bool left = false;
      candidate_loss = eval.loss(candidate, &left);
      if (!left && candidate_loss < loss) {
        accepted = true;
        break;
      }
      candidate_left_workspace = candidate_left_workspace || left;
      step *= settings.backtracking_factor;
    }
    if (!accepted) {
      outcome.failure = candidate_left_workspace ? ProjectionFailure::out_of_workspace
                                                 : ProjectionFailure::local_minimum;
      outcome.residual = loss;
      outcome.iterations = iter - 1;
      // Leave poses consistent with outcome.q for any follow-up evaluation.
      eval.loss(outcome.q, nullptr);
      return outcome;
    }

    const double moved = (candidate - outcome.q).norm();
    outcome.q = candidate;
    loss = candidate_loss;
    outcome.iterations = iter;
    if (loss < settings.manifold_tolerance) {
      outcome.converged = true;
      outcome.residual = loss;
      return outcome;
    }
    if (moved < settings.step_tolerance) {
      outcome.failure = ProjectionFailure::local_minimum;
      outcome.residual = loss;
      return outcome;
    }
  }
  outcome.failure = ProjectionFailure::iteration_cap;
  outcome.residual = loss;
  return outcome;
}

std::vector<Config> sample_uniform_projection(const ManifoldProblem& problem,
                                              const ContactVector& contact,
                                              const ProjectionSettings& settings, int n,
                                              std::mt19937_64& rng, SamplerReport* report) {
  const Config lower = problem.chain->lower_limits();
  const Config upper = problem.chain->upper_limits();
  const int dim = problem.chain->joint_count();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SamplerReport local;
  std::vector<Config> samples;
  samples.reserve(n);
  const long budget = static_cast<long>(settings.max_retries) * n;
  Config seed(dim);
  while (static_cast<int>(samples.size()) < n && local.attempts < budget) {
    ++local.attempts;
    for (int d = 0; d < dim; ++d) seed[d] = lower[d] + (upper[d] - lower[d]) * unit(rng);
    ProjectionOutcome outcome = project_to_manifold(problem, seed, contact, settings);
    if (outcome.converged) {
      ++local.successes;
      samples.push_back(std::move(outcome.q));
    } else {
      ++local.failures;
    }
  }
  local.shortfall = static_cast<int>(samples.size()) < n;
  if (report != nullptr) *report = local;
  return samples;
}

std::vector<Config> sample_particle_projection(const ManifoldProblem& problem,
                                               const ContactVector& contact,
                                               const ProjectionSettings& settings,
                                               const std::vector<Config>& seeds,
                                               SamplerReport* report) {
  SamplerReport local;
  std::vector<Config> samples;
  samples.reserve(seeds.size());
  for (const Config& seed : seeds) {
    ++local.attempts;
    ProjectionOutcome outcome = project_to_manifold(problem, seed, contact, settings);
    if (outcome.converged) {
      ++local.successes;
      samples.push_back(std::move(outcome.q));
    } else {
      ++local.failures;
    }
  }
  local.shortfall = samples.size() < seeds.size();
  if (report != nullptr) *report = local;
  return samples;
}

Config draw_ball_seed(const std::vector<Config>& seeds, double ball_radius, const Config& lower,
                      const Config& upper, std::mt19937_64& rng) {
  if (seeds.empty()) throw std::invalid_argument("draw_ball_seed: empty seed set");
  const int dim = static_cast<int>(seeds.front().size());
  std::uniform_int_distribution<std::size_t> pick(0, seeds.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r2 = ball_radius * ball_radius;

  // Rejection loop terminates quickly: overlap counts are bounded by the
  // seed count, and the acceptance test needs on average O(1) redraws.
  for (int tries = 0; tries < 1024; ++tries) {
    const Config candidate = seeds[pick(rng)] + uniform_ball(dim, ball_radius, rng);
    int covering = 0;
    for (const Config& s : seeds) {
      if ((candidate - s).squaredNorm() <= r2) ++covering;
    }
    if (covering == 0) covering = 1;  // the center ball, up to float round-off
    if (unit(rng) * covering <= 1.0) return candidate.cwiseMax(lower).cwiseMin(upper);
  }
  return seeds[pick(rng)].cwiseMax(lower).cwiseMin(upper);
}

std::vector<Config> sample_ball_projection(const ManifoldProblem& problem,
                                           const ContactVector& contact,
                                           const ProjectionSettings& settings,
                                           const std::vector<Config>& seeds, double ball_radius,
                                           int n, std::mt19937_64& rng, SamplerReport* report) {
  const Config lower = problem.chain->lower_limits();
  const Config upper = problem.chain->upper_limits();

  SamplerReport local;
  std::vector<Config> samples;
  samples.reserve(n);
  const long budget = static_cast<long>(settings.max_retries) * n;
  while (static_cast<int>(samples.size()) < n && local.attempts < budget && !seeds.empty()) {
    ++local.attempts;
    const Config seed = draw_ball_seed(seeds, ball_radius, lower, upper, rng);
    ProjectionOutcome outcome = project_to_manifold(problem, seed, contact, settings);
    if (outcome.converged) {
      ++local.successes;
      samples.push_back(std::move(outcome.q));
    } else {
      ++local.failures;
    }
  }
  local.shortfall = static_cast<int>(samples.size()) < n;
  if (report != nullptr) *report = local;
  return samples;
}

}  // namespace mpf
