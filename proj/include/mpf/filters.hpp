#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mpf/collision.hpp"
#include "mpf/contact_manifold.hpp"

namespace mpf {

// Particles live in offset space: the estimated configuration is
// q = q_e + offset for the current encoder reading q_e.
struct Particle {
  Config offset;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;

  int size() const { return static_cast<int>(particles.size()); }
  double weight_sum() const;
  Config weighted_mean() const;
};

struct Observation {
  Config encoder;                      // masked reading, zero on unobserved joints
  std::vector<std::uint8_t> observed;  // per-joint encoder availability
  ContactVector contact;
};

struct TransitionNoise {
  double velocity_noise_radius = 0.0;  // rad/s, uniform ball around the command
  double dt = 0.1;
};

struct BeliefPrior {
  Config variance;                    // per-joint offset variance (observed joints)
  double unobserved_half_width = 1.0; // uniform +/- range for unobserved joints
};

struct KdeSettings {
  double bandwidth_floor = 1e-3;  // rad
};

enum class ResamplePolicy { ess_half, always };

enum class ManifoldStrategy { uniform, particle, ball };

struct FilterModels {
  const RobotWorld* world = nullptr;
  TransitionNoise transition;
  BeliefPrior prior;
  std::vector<std::uint8_t> observed;
  double contact_scale = 0.01;  // sigma_c in the contact pseudo-likelihood
  KdeSettings kde;
  ProjectionSettings projection;
  ResamplePolicy resample = ResamplePolicy::ess_half;
  // On contact steps the manifold samples can additionally be weighted by the
  // inactive-sensor factors of the pseudo-likelihood.
  bool inactive_factor_on_contact = true;
};

struct StepDiagnostics {
  double transition_seconds = 0.0;
  double observation_seconds = 0.0;
  bool contact_branch = false;
  bool weight_underflow = false;
  bool sampler_shortfall = false;
  bool sampler_fallback = false;  // manifold sampling failed, fell back to likelihood weights
  bool resampled = false;
  int manifold_samples = 0;
  double ess = 0.0;  // before resampling
};

// Gaussian product-kernel density with per-dimension Silverman bandwidths
//   h_d = max(floor, 1.06 * sigma_d * k^(-1/5)),
// where sigma_d is the weighted standard deviation of the support.
class KdeEstimate {
 public:
  KdeEstimate(const ParticleSet& support, const KdeSettings& settings);

  double density(const Config& x) const;
  const Config& bandwidths() const { return bandwidths_; }

 private:
  std::vector<Config> points_;
  std::vector<double> weights_;
  Config bandwidths_;
  Config inv_bandwidths_;
  double normalization_ = 1.0;
};

double kde_weight(const ParticleSet& support, const Config& x, const KdeSettings& settings);

// Initial belief: Gaussian prior draws on observed joints, uniform draws on
// unobserved ones, uniform weights.
ParticleSet init_belief(const FilterModels& models, int count, std::mt19937_64& rng);

// One motion-model draw: add uniform-ball velocity noise around the command,
// integrate over dt, then resolve collisions of the implied configuration
// q_e_next + offset. Returns the new offset.
Config transition_sample(const Config& offset, const Config& u, const Config& q_e_next,
                         const TransitionNoise& noise, const RobotWorld& world,
                         std::mt19937_64& rng);

// Pseudo-likelihood of the binary contact vector given a configuration:
// product over sensors of exp(-d^2 / (2 sigma^2)) when active and
// max(1 - exp(-d^2 / (2 sigma^2)), 1e-6) when inactive, with d the signed
// surface distance of the sensor.
double contact_likelihood(const ContactVector& contact, const Config& q, const RobotWorld& world,
                          double contact_scale);

// Scales weights to sum to one. When the sum underflows to zero the weights
// are reset to uniform and false is returned (particle deprivation).
bool normalize_weights(ParticleSet& set);

// 1 / sum(w^2) for normalized weights.
double effective_sample_size(const ParticleSet& set);

// Systematic (low-variance) resampling with a single uniform offset. Output
// weights are uniform. `count` defaults to the input size.
ParticleSet resample_systematic(const ParticleSet& set, std::mt19937_64& rng, int count = -1);

// Weighted root-mean-square configuration error of the belief against the
// true configuration. Estimates are reconstructed as q_e + offset.
double w_rmse(const ParticleSet& set, const Config& q_true, const Config& q_e);

// One conventional particle filter step: transition every particle, weight by
// the contact pseudo-likelihood, normalize, and resample when the effective
// sample size drops below half the particle count (or always, per policy).
ParticleSet cpf_step(const ParticleSet& belief, const Config& u, const Observation& observation,
                     const FilterModels& models, std::mt19937_64& rng,
                     StepDiagnostics* diagnostics = nullptr);

// One manifold particle filter step. Without contact this is exactly
// cpf_step. With contact, particles are drawn from the contact manifold via
// the configured strategy and weighted by a kernel density estimate of the
// forward-simulated belief (the dual of the conventional proposal).
ParticleSet mpf_step(const ParticleSet& belief, const Config& u, const Config& q_e_prev,
                     const Observation& observation, ManifoldStrategy strategy,
                     const FilterModels& models, std::mt19937_64& rng,
                     StepDiagnostics* diagnostics = nullptr);

}  // namespace mpf
