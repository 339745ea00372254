#include "mpf/collision.hpp"

#include <algorithm>
#include <cmath>

namespace mpf {
namespace {

struct PenetrationState {
  double loss = 0.0;
  double min_distance = 0.0;
};

PenetrationState penetration(const RobotWorld& world, const std::vector<Pose>& poses) {
  PenetrationState state;
  state.min_distance = std::numeric_limits<double>::infinity();
  for (const SensorSpec& body : world.bodies) {
    const SdfSample sample = sample_distance(world.sdf, sensor_center(poses, body));
    const double d = sample.value - body.radius;
    state.min_distance = std::min(state.min_distance, d);
    if (d < 0.0) state.loss += d * d;
  }
  return state;
}

}  // namespace

double min_body_distance(const RobotWorld& world, const Config& q) {
  const std::vector<Pose> poses = forward_kinematics(world.chain, q);
  return penetration(world, poses).min_distance;
}

Config resolve_collision(const RobotWorld& world, const Config& q_candidate,
                         CollisionReport* report) {
  CollisionReport local;
  std::vector<Pose> poses;
  forward_kinematics(world.chain, q_candidate, poses);
  PenetrationState state = penetration(world, poses);

  Config q = q_candidate;
  if (state.min_distance >= -world.collision.penetration_tolerance) {
    if (report != nullptr) *report = local;
    return q;
  }

  Config grad(q.size());
  Config candidate(q.size());
  Eigen::Matrix3Xd jacobian;
  for (int iter = 1; iter <= world.collision.max_iterations; ++iter) {
    grad.setZero();
    for (const SensorSpec& body : world.bodies) {
      const Vec3 center = sensor_center(poses, body);
      const SdfSample sample = sample_distance(world.sdf, center);
      const double d = sample.value - body.radius;
      if (d >= 0.0) continue;
      const GradientSample slope = sample_gradient(world.sdf, center);
      linear_jacobian(world.chain, poses, body, jacobian);
      grad.noalias() += 2.0 * d * (jacobian.transpose() * slope.gradient);
    }

    double step = world.collision.learning_rate;
    bool accepted = false;
    for (int b = 0; b <= world.collision.max_backtracks; ++b) {
      candidate = world.chain.clamp_to_limits(q - step * grad);
      forward_kinematics(world.chain, candidate, poses);
      const PenetrationState next = penetration(world, poses);
      if (next.loss < state.loss) {
        q = candidate;
        state = next;
        accepted = true;
        local.moved = true;
        break;
      }
      step *= world.collision.backtracking_factor;
    }
    local.iterations = iter;
    if (!accepted) break;
    if (state.min_distance >= -world.collision.penetration_tolerance) break;
  }

  local.resolved = state.min_distance >= -world.collision.penetration_tolerance;
  if (report != nullptr) *report = local;
  return q;
}

}  // namespace mpf
