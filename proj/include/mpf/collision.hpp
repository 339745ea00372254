#pragma once

#include <vector>

#include "mpf/contact_manifold.hpp"
#include "mpf/kinematics.hpp"
#include "mpf/sdf_grid.hpp"

namespace mpf {

struct CollisionSettings {
  // A body may end up at most this far (in meters) inside an obstacle.
  double penetration_tolerance = 1e-4;
  double learning_rate = 0.25;
  int max_iterations = 100;
  double backtracking_factor = 0.5;
  int max_backtracks = 20;
};

// Everything the filters need about one robot in one environment: the chain,
// the contact sensors (used for observation and manifold constraints), the
// collision bodies (spheres pushed out of obstacles by the simulator), and
// the signed distance field.
struct RobotWorld {
  ChainModel chain;
  std::vector<SensorSpec> sensors;
  std::vector<SensorSpec> bodies;
  SdfGrid sdf;
  CollisionSettings collision;

  ManifoldProblem manifold_problem() const { return ManifoldProblem{&chain, &sensors, &sdf}; }
};

struct CollisionReport {
  bool moved = false;
  bool resolved = true;  // false when iterations ran out while still penetrating
  int iterations = 0;
};

// Smallest signed body-surface distance (sdf value minus body radius) over
// all collision bodies. Negative means penetration.
double min_body_distance(const RobotWorld& world, const Config& q);

// Frictionless penetration resolution: gradient descent on the one-sided loss
//   sum_i min(phi(p_i) - r_i, 0)^2
// until every body is within penetration_tolerance of free space. Returns the
// input unchanged when nothing penetrates.
Config resolve_collision(const RobotWorld& world, const Config& q_candidate,
                         CollisionReport* report = nullptr);

}  // namespace mpf
