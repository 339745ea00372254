#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mpf/kinematics.hpp"
#include "mpf/sdf_grid.hpp"

namespace mpf {

// Binary contact readings, one per sensor.
struct ContactVector {
  std::vector<std::uint8_t> bits;

  int size() const { return static_cast<int>(bits.size()); }
  bool any() const {
    for (std::uint8_t b : bits) {
      if (b) return true;
    }
    return false;
  }
  int active_count() const {
    int n = 0;
    for (std::uint8_t b : bits) n += b ? 1 : 0;
    return n;
  }
};

// The robot and environment a contact reading constrains. Non-owning.
struct ManifoldProblem {
  const ChainModel* chain = nullptr;
  const std::vector<SensorSpec>* sensors = nullptr;
  const SdfGrid* sdf = nullptr;
};

struct ProjectionSettings {
  double learning_rate = 0.5;
  int max_iterations = 100;
  // Loss value below which a configuration counts as on-manifold. The
  // default corresponds to (0.5 * resolution)^2 at 1 cm resolution.
  double manifold_tolerance = 2.5e-5;
  double step_tolerance = 1e-6;
  double backtracking_factor = 0.5;
  int max_backtracks = 20;
  // Sampling attempt budget per requested sample (uniform strategy).
  int max_retries = 50;
};

enum class ProjectionFailure { none, local_minimum, iteration_cap, out_of_workspace };

struct ProjectionOutcome {
  bool converged = false;
  ProjectionFailure failure = ProjectionFailure::none;
  Config q;
  double residual = 0.0;
  int iterations = 0;
};

// Sum over active sensors of squared signed surface distance,
//   D_c(q) = sum_i (phi(p_i(q)) - r_i)^2.
// Zero exactly on the contact manifold of `contact`. When any queried sensor
// center leaves the workspace bounds, *out_of_workspace is set and the
// returned value is unreliable.
double contact_loss(const ManifoldProblem& problem, const Config& q, const ContactVector& contact,
                    bool* out_of_workspace = nullptr);

// Gradient of contact_loss by the chain rule,
//   2 * sum_i (phi(p_i) - r_i) * J_i^T grad phi(p_i).
Config contact_loss_gradient(const ManifoldProblem& problem, const Config& q,
                             const ContactVector& contact, bool* out_of_workspace = nullptr);

// Gradient descent on contact_loss with backtracking line search; iterates
// are clamped to joint limits. Only steps that decrease the loss are taken,
// so the residual is non-increasing.
ProjectionOutcome project_to_manifold(const ManifoldProblem& problem, const Config& q_init,
                                      const ContactVector& contact,
                                      const ProjectionSettings& settings);

struct SamplerReport {
  int attempts = 0;
  int successes = 0;
  int failures = 0;
  bool shortfall = false;  // fewer samples than requested
};

// Draws projection seeds uniformly within joint limits until n samples
// converge or the attempt budget (max_retries * n) runs out.
std::vector<Config> sample_uniform_projection(const ManifoldProblem& problem,
                                              const ContactVector& contact,
                                              const ProjectionSettings& settings, int n,
                                              std::mt19937_64& rng,
                                              SamplerReport* report = nullptr);

// Projects each seed configuration directly; failures are dropped.
std::vector<Config> sample_particle_projection(const ManifoldProblem& problem,
                                               const ContactVector& contact,
                                               const ProjectionSettings& settings,
                                               const std::vector<Config>& seeds,
                                               SamplerReport* report = nullptr);

// One seed drawn uniformly from the union of radius-`ball_radius` balls
// around the seed set. A candidate landing inside m balls is kept with
// probability 1/m, which makes the draw uniform over the union despite
// overlaps. The result is clamped to the given joint limits.
Config draw_ball_seed(const std::vector<Config>& seeds, double ball_radius, const Config& lower,
                      const Config& upper, std::mt19937_64& rng);

// Projects seeds drawn by draw_ball_seed until n samples converge or the
// attempt budget runs out.
std::vector<Config> sample_ball_projection(const ManifoldProblem& problem,
                                           const ContactVector& contact,
                                           const ProjectionSettings& settings,
                                           const std::vector<Config>& seeds, double ball_radius,
                                           int n, std::mt19937_64& rng,
                                           SamplerReport* report = nullptr);

}  // namespace mpf
