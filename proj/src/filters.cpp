#include "mpf/filters.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mpf {
namespace {

constexpr double kWeightFloor = 1e-6;
constexpr double kSqrtTwoPi = 2.5066282746310002;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double ParticleSet::weight_sum() const {
  double sum = 0.0;
  for (const Particle& p : particles) sum += p.weight;
  return sum;
}

Config ParticleSet::weighted_mean() const {
  if (particles.empty()) throw std::logic_error("weighted_mean: empty particle set");
  Config mean = Config::Zero(particles.front().offset.size());
  double sum = 0.0;
  for (const Particle& p : particles) {
    mean += p.weight * p.offset;
    sum += p.weight;
  }
  if (sum <= 0.0) throw std::logic_error("weighted_mean: zero total weight");
  return mean / sum;
}

KdeEstimate::KdeEstimate(const ParticleSet& support, const KdeSettings& settings) {
  if (support.size() == 0) throw std::invalid_argument("KdeEstimate: empty support");
  const int k = support.size();
  const int dim = static_cast<int>(support.particles.front().offset.size());

  points_.reserve(k);
  weights_.reserve(k);
  const double total = support.weight_sum();
  for (const Particle& p : support.particles) {
    points_.push_back(p.offset);
    weights_.push_back(total > 0.0 ? p.weight / total : 1.0 / k);
  }

  Config mean = Config::Zero(dim);
  for (int i = 0; i < k; ++i) mean += weights_[i] * points_[i];
  Config var = Config::Zero(dim);
  for (int i = 0; i < k; ++i) {
    const Config d = points_[i] - mean;
    var += weights_[i] * d.cwiseProduct(d);
  }

  const double silverman = 1.06 * std::pow(static_cast<double>(k), -0.2);
  bandwidths_.resize(dim);
  inv_bandwidths_.resize(dim);
  normalization_ = 1.0;
  for (int d = 0; d < dim; ++d) {
    bandwidths_[d] = std::max(settings.bandwidth_floor, silverman * std::sqrt(var[d]));
    inv_bandwidths_[d] = 1.0 / bandwidths_[d];
    normalization_ /= kSqrtTwoPi * bandwidths_[d];
  }
}

double KdeEstimate::density(const Config& x) const {
  double sum = 0.0;
  const int dim = static_cast<int>(x.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double z2 = 0.0;
    const Config& p = points_[i];
    for (int d = 0; d < dim; ++d) {
      const double z = (x[d] - p[d]) * inv_bandwidths_[d];
      z2 += z * z;
    }
    sum += weights_[i] * std::exp(-0.5 * z2);
  }
  return sum * normalization_;
}

double kde_weight(const ParticleSet& support, const Config& x, const KdeSettings& settings) {
  return KdeEstimate(support, settings).density(x);
}

ParticleSet init_belief(const FilterModels& models, int count, std::mt19937_64& rng) {
  const int dim = static_cast<int>(models.prior.variance.size());
  if (static_cast<int>(models.observed.size()) != dim) {
    throw std::invalid_argument("init_belief: observed mask size mismatch");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  ParticleSet set;
  set.particles.resize(count);
  for (Particle& p : set.particles) {
    p.offset.resize(dim);
    for (int d = 0; d < dim; ++d) {
      p.offset[d] = models.observed[d]
                        ? gauss(rng) * std::sqrt(models.prior.variance[d])
                        : sym(rng) * models.prior.unobserved_half_width;
    }
    p.weight = 1.0 / count;
  }
  return set;
}

Config transition_sample(const Config& offset, const Config& u, const Config& q_e_next,
                         const TransitionNoise& noise, const RobotWorld& world,
                         std::mt19937_64& rng) {
  const int dim = static_cast<int>(offset.size());
  const Config u_noisy = u + uniform_ball(dim, noise.velocity_noise_radius, rng);
  const Config moved = offset + (u_noisy - u) * noise.dt;
  CollisionReport report;
  const Config resolved = resolve_collision(world, q_e_next + moved, &report);
  if (!report.moved) return moved;
  return resolved - q_e_next;
}

namespace {

// skip_active restricts the product to inactive sensors, used when active
// sensors are already enforced exactly by a manifold constraint.
double likelihood_product(const ContactVector& contact, const Config& q, const RobotWorld& world,
                          double contact_scale, bool skip_active) {
  if (contact.size() != static_cast<int>(world.sensors.size())) {
    throw std::invalid_argument("contact_likelihood: contact vector size mismatch");
  }
  const std::vector<Pose> poses = forward_kinematics(world.chain, q);
  const double inv_two_sigma2 = 1.0 / (2.0 * contact_scale * contact_scale);
  double likelihood = 1.0;
  for (int i = 0; i < contact.size(); ++i) {
    if (contact.bits[i] && skip_active) continue;
    const SensorSpec& sensor = world.sensors[i];
    const SdfSample sample = sample_distance(world.sdf, sensor_center(poses, sensor));
    const double d = sample.value - sensor.radius;
    const double match = std::exp(-d * d * inv_two_sigma2);
    likelihood *= contact.bits[i] ? match : std::max(1.0 - match, kWeightFloor);
  }
  return likelihood;
}

}  // namespace

double contact_likelihood(const ContactVector& contact, const Config& q, const RobotWorld& world,
                          double contact_scale) {
  return likelihood_product(contact, q, world, contact_scale, false);
}

bool normalize_weights(ParticleSet& set) {
  const double sum = set.weight_sum();
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    const double uniform = 1.0 / std::max(set.size(), 1);
    for (Particle& p : set.particles) p.weight = uniform;
    return false;
  }
  for (Particle& p : set.particles) p.weight /= sum;
  return true;
}

double effective_sample_size(const ParticleSet& set) {
  const double sum = set.weight_sum();
  if (sum <= 0.0) return 0.0;
  double sq = 0.0;
  for (const Particle& p : set.particles) {
    const double w = p.weight / sum;
    sq += w * w;
  }
  return 1.0 / sq;
}

ParticleSet resample_systematic(const ParticleSet& set, std::mt19937_64& rng, int count) {
  if (set.size() == 0) throw std::invalid_argument("resample_systematic: empty particle set");
  const int out_count = count < 0 ? set.size() : count;
  const double sum = set.weight_sum();
  if (sum <= 0.0) throw std::invalid_argument("resample_systematic: zero total weight");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double stride = sum / out_count;
  double pointer = unit(rng) * stride;
  ParticleSet out;
  out.particles.reserve(out_count);
  double cumulative = set.particles.front().weight;
  int i = 0;
  for (int j = 0; j < out_count; ++j) {
    while (cumulative < pointer && i + 1 < set.size()) {
      ++i;
      cumulative += set.particles[i].weight;
    }
    out.particles.push_back({set.particles[i].offset, 1.0 / out_count});
    pointer += stride;
  }
  return out;
}

double w_rmse(const ParticleSet& set, const Config& q_true, const Config& q_e) {
  const double sum = set.weight_sum();
  if (set.size() == 0 || sum <= 0.0) throw std::invalid_argument("w_rmse: degenerate particle set");
  double acc = 0.0;
  for (const Particle& p : set.particles) {
    acc += p.weight * (q_e + p.offset - q_true).squaredNorm();
  }
  return std::sqrt(acc / sum);
}

namespace {

void maybe_resample(ParticleSet& set, const FilterModels& models, int target_count,
                    std::mt19937_64& rng, StepDiagnostics& diag) {
  diag.ess = effective_sample_size(set);
  const bool trigger = models.resample == ResamplePolicy::always ||
                       diag.ess < 0.5 * target_count || set.size() != target_count;
  if (trigger) {
    set = resample_systematic(set, rng, target_count);
    diag.resampled = true;
  }
}

}  // namespace

ParticleSet cpf_step(const ParticleSet& belief, const Config& u, const Observation& observation,
                     const FilterModels& models, std::mt19937_64& rng,
                     StepDiagnostics* diagnostics) {
  StepDiagnostics diag;
  const RobotWorld& world = *models.world;
  const Config& q_e = observation.encoder;

  const auto t0 = std::chrono::steady_clock::now();
  ParticleSet next;
  next.particles.reserve(belief.size());
  for (const Particle& p : belief.particles) {
    next.particles.push_back(
        {transition_sample(p.offset, u, q_e, models.transition, world, rng), p.weight});
  }
  diag.transition_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  for (Particle& p : next.particles) {
    p.weight *= contact_likelihood(observation.contact, q_e + p.offset, world,
                                   models.contact_scale);
  }
  diag.weight_underflow = !normalize_weights(next);
  maybe_resample(next, models, belief.size(), rng, diag);
  diag.observation_seconds = seconds_since(t1);

  if (diagnostics != nullptr) *diagnostics = diag;
  return next;
}

ParticleSet mpf_step(const ParticleSet& belief, const Config& u, const Config& q_e_prev,
                     const Observation& observation, ManifoldStrategy strategy,
                     const FilterModels& models, std::mt19937_64& rng,
                     StepDiagnostics* diagnostics) {
  if (!observation.contact.any()) {
    return cpf_step(belief, u, observation, models, rng, diagnostics);
  }

  StepDiagnostics diag;
  diag.contact_branch = true;
  const RobotWorld& world = *models.world;
  const Config& q_e = observation.encoder;

  const auto t0 = std::chrono::steady_clock::now();
  ParticleSet forward;
  forward.particles.reserve(belief.size());
  for (const Particle& p : belief.particles) {
    forward.particles.push_back(
        {transition_sample(p.offset, u, q_e, models.transition, world, rng), p.weight});
  }
  diag.transition_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  // During persistent contact the manifold moves in offset space by up to the
  // commanded step per tick, so the evaluation kernel must bridge that motion
  // or consecutive-touch weights underflow once the belief has collapsed.
  KdeSettings kde_settings = models.kde;
  kde_settings.bandwidth_floor = std::max(
      kde_settings.bandwidth_floor,
      (u.norm() + models.transition.velocity_noise_radius) * models.transition.dt);
  const KdeEstimate kde(forward, kde_settings);
  const ManifoldProblem problem = world.manifold_problem();

  std::vector<Config> samples;
  SamplerReport report;
  switch (strategy) {
    case ManifoldStrategy::uniform:
      samples = sample_uniform_projection(problem, observation.contact, models.projection,
                                          belief.size(), rng, &report);
      break;
    case ManifoldStrategy::particle: {
      std::vector<Config> seeds;
      seeds.reserve(belief.size());
      for (const Particle& p : belief.particles) seeds.push_back(q_e_prev + p.offset);
      samples = sample_particle_projection(problem, observation.contact, models.projection, seeds,
                                           &report);
      break;
    }
    case ManifoldStrategy::ball: {
      std::vector<Config> seeds;
      seeds.reserve(belief.size());
      for (const Particle& p : belief.particles) seeds.push_back(q_e_prev + p.offset);
      // Radius covering the one-step transition support plus one kernel
      // bandwidth, so projected mass can land anywhere the forward belief
      // has density. The bandwidth term uses the raw belief spread, not the
      // motion-bridging floor applied to the evaluation kernel above: a
      // radius floored at the per-step motion in every dimension re-inflates
      // the cloud along the manifold tangent faster than projection
      // contracts it, and the belief never converges.
      const KdeEstimate kde_raw(forward, models.kde);
      const double radius = (u.norm() + models.transition.velocity_noise_radius) *
                                models.transition.dt +
                            kde_raw.bandwidths().minCoeff();
      samples = sample_ball_projection(problem, observation.contact, models.projection, seeds,
                                       radius, belief.size(), rng, &report);
      break;
    }
  }
  diag.manifold_samples = static_cast<int>(samples.size());
  diag.sampler_shortfall = report.shortfall;

  ParticleSet next;
  if (samples.empty()) {
    // Nothing reached the manifold; fall back to conventional weighting of
    // the forward-simulated set so the step still uses the contact reading.
    diag.sampler_fallback = true;
    next = std::move(forward);
    for (Particle& p : next.particles) {
      p.weight *= contact_likelihood(observation.contact, q_e + p.offset, world,
                                     models.contact_scale);
    }
  } else {
    next.particles.reserve(samples.size());
    for (Config& sample : samples) {
      Particle p;
      p.offset = sample - q_e;
      p.weight = kde.density(p.offset);
      if (models.inactive_factor_on_contact) {
        p.weight *= likelihood_product(observation.contact, q_e + p.offset, world,
                                       models.contact_scale, /*skip_active=*/true);
      }
      next.particles.push_back(std::move(p));
    }
  }

  diag.weight_underflow = !normalize_weights(next);
  maybe_resample(next, models, belief.size(), rng, diag);
  diag.observation_seconds = seconds_since(t1);

  if (diagnostics != nullptr) *diagnostics = diag;
  return next;
}

}  // namespace mpf
