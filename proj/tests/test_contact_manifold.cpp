#include <doctest.h>

#include <random>

#include "mpf/collision.hpp"
#include "mpf/contact_manifold.hpp"
#include "support/oracles.hpp"

using namespace mpf;

namespace {

// Unit two-link planar arm with a tip sensor and a mid-link sensor, in a
// world whose only obstacle is the half space x >= 0.8. Voxel centers align
// so the zero contour sits exactly at x = 0.8 and the free-space field is
// exactly phi(p) = 0.8 - p.x.
RobotWorld wall_world() {
  RobotWorld world;
  world.chain.dimension = 2;
  world.chain.joints.resize(2);
  world.chain.joints[1].parent_offset = Vec3(1.0, 0.0, 0.0);

  SensorSpec tip;
  tip.link_index = 1;
  tip.local_offset = Vec3(1.0, 0.0, 0.0);
  SensorSpec mid;
  mid.link_index = 0;
  mid.local_offset = Vec3(0.6, 0.0, 0.0);
  world.sensors = {tip, mid};
  world.bodies = world.sensors;

  WorkspaceBounds bounds;
  bounds.dimension = 2;
  bounds.min_corner = Vec3(-2.2, -2.2, 0.0);
  bounds.max_corner = Vec3(2.2, 2.2, 0.0);
  std::vector<Primitive> obstacles{HalfSpacePrimitive{Vec3(-1.0, 0.0, 0.0), -0.8}};
  world.sdf = distance_transform(build_occupancy(obstacles, bounds, 0.05));
  return world;
}

// Unit two-link arm with a point tip sensor and a single point obstacle at
// (1, 1), chosen so (1, 1) is exactly a voxel center at 1 cm resolution.
RobotWorld point_obstacle_world() {
  RobotWorld world;
  world.chain.dimension = 2;
  world.chain.joints.resize(2);
  world.chain.joints[1].parent_offset = Vec3(1.0, 0.0, 0.0);

  SensorSpec tip;
  tip.link_index = 1;
  tip.local_offset = Vec3(1.0, 0.0, 0.0);
  world.sensors = {tip};
  world.bodies = world.sensors;

  WorkspaceBounds bounds;
  bounds.dimension = 2;
  bounds.min_corner = Vec3(-2.195, -2.195, 0.0);
  bounds.max_corner = Vec3(2.215, 2.215, 0.0);
  std::vector<Primitive> obstacles{PointPrimitive{Vec3(1.0, 1.0, 0.0)}};
  world.sdf = distance_transform(build_occupancy(obstacles, bounds, 0.01));
  return world;
}

ProjectionSettings settings_for(const RobotWorld& world) {
  ProjectionSettings s;
  const double res = world.sdf.resolution;
  s.manifold_tolerance = 0.25 * res * res;
  return s;
}

ContactVector bits(std::initializer_list<int> list) {
  ContactVector c;
  for (int b : list) c.bits.push_back(static_cast<std::uint8_t>(b));
  return c;
}

double min_ik_distance(const Config& q, const std::vector<Eigen::Vector2d>& solutions) {
  double best = std::numeric_limits<double>::infinity();
  for (const Eigen::Vector2d& sol : solutions) {
    best = std::min(best, (q - Config(sol)).norm());
  }
  return best;
}

}  // namespace

TEST_CASE("contact loss matches the analytic wall distance") {
  const RobotWorld world = wall_world();
  const ManifoldProblem problem = world.manifold_problem();

  // Free-space voxel values measure to the first occupied center at x = 0.825;
  // occupied values measure back to the last free center at x = 0.775. The
  // interpolated zero contour sits at the wall surface x = 0.8.
  Config q(2);
  q << M_PI / 2.0, 0.0;  // arm straight up: tip (0, 2), mid (0.6, 0) rotated -> (0, 0.6)
  const double tip_d = 0.825 - 0.0;
  const double mid_d = 0.825 - 0.0;

  CHECK(contact_loss(problem, q, bits({1, 0})) == doctest::Approx(tip_d * tip_d));
  CHECK(contact_loss(problem, q, bits({0, 1})) == doctest::Approx(mid_d * mid_d));
  CHECK(contact_loss(problem, q, bits({1, 1})) == doctest::Approx(tip_d * tip_d + mid_d * mid_d));
  CHECK(contact_loss(problem, q, bits({0, 0})) == 0.0);

  q << 0.0, 0.0;  // tip (2, 0) inside the wall, mid (0.6, 0) outside
  const double inside = 0.775 - 2.0;
  CHECK(contact_loss(problem, q, bits({1, 0})) == doctest::Approx(inside * inside));
}

TEST_CASE("sensor radius shifts the zero of the loss") {
  const RobotWorld world = wall_world();
  ManifoldProblem problem = world.manifold_problem();
  std::vector<SensorSpec> padded = world.sensors;
  padded[0].radius = 0.1;
  problem.sensors = &padded;

  // Tip at the voxel center x = 0.725 reads exactly 0.1 == radius.
  const double reach_x = 0.725;
  const double q2 = 2.0 * std::acos(reach_x / 2.0);
  Config q(2);
  q << -q2 / 2.0, q2;
  CHECK(contact_loss(problem, q, bits({1, 0})) < 1e-6);
}

TEST_CASE("loss gradient matches finite differences of the loss") {
  const RobotWorld world = wall_world();
  const ManifoldProblem problem = world.manifold_problem();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_int_distribution<int> pattern(0, 2);
  const double h = 1e-6;
  const double res = world.sdf.resolution;

  // Skip configurations whose active sensors sit in the slope-doubled band
  // straddling the wall surface; the field gradient is only defined up to the
  // interpolation stencil there.
  const auto in_kink_band = [&](const Config& q, const ContactVector& contact) {
    const std::vector<Pose> poses = forward_kinematics(world.chain, q);
    for (int i = 0; i < contact.size(); ++i) {
      if (!contact.bits[i]) continue;
      const double x = sensor_center(poses, world.sensors[i]).x();
      if (std::abs(x - 0.8) < 2.5 * res) return true;
    }
    return false;
  };

  int checked = 0;
  while (checked < 250) {
    Config q(2);
    q << angle(rng), angle(rng);
    const ContactVector contact =
        pattern(rng) == 0 ? bits({1, 0}) : (pattern(rng) == 1 ? bits({0, 1}) : bits({1, 1}));
    if (in_kink_band(q, contact)) continue;

    const Config grad = contact_loss_gradient(problem, q, contact);
    for (int j = 0; j < 2; ++j) {
      Config qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const double fd =
          (contact_loss(problem, qp, contact) - contact_loss(problem, qm, contact)) / (2.0 * h);
      const double scale = std::max(1.0, std::abs(fd));
      CHECK(std::abs(grad[j] - fd) / scale < 1e-3);
    }
    ++checked;
  }
}

TEST_CASE("gradient vanishes on the manifold") {
  const RobotWorld world = wall_world();
  const ManifoldProblem problem = world.manifold_problem();
  // Tip exactly on the contour x = 0.8.
  const double q2 = 2.0 * std::acos(0.8 / 2.0);
  Config q(2);
  q << -q2 / 2.0, q2;
  REQUIRE(contact_loss(problem, q, bits({1, 0})) < 1e-10);
  CHECK(contact_loss_gradient(problem, q, bits({1, 0})).norm() < 1e-4);
}

TEST_CASE("projection converges to the analytic solution pair") {
  const RobotWorld world = point_obstacle_world();
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);
  const ContactVector contact = bits({1});
  const std::vector<Eigen::Vector2d> ik = oracle::two_link_ik(1.0, 1.0, {1.0, 1.0});
  REQUIRE(ik.size() == 2);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  int converged = 0;
  for (int i = 0; i < 60; ++i) {
    Config q(2);
    q << angle(rng), angle(rng);
    const double initial = contact_loss(problem, q, contact);
    const ProjectionOutcome outcome = project_to_manifold(problem, q, contact, settings);
    if (!outcome.converged) continue;
    ++converged;
    CHECK(outcome.residual < settings.manifold_tolerance);
    CHECK(outcome.residual <= initial + 1e-12);
    CHECK(outcome.iterations <= settings.max_iterations);
    CHECK(world.chain.within_limits(outcome.q));
    CHECK(min_ik_distance(outcome.q, ik) < 0.05);
  }
  CHECK(converged > 40);
}

TEST_CASE("projection reports convergence on entry without iterating") {
  const RobotWorld world = point_obstacle_world();
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);
  const ContactVector contact = bits({1});

  Config q(2);
  q << 0.2, 1.3;
  const ProjectionOutcome first = project_to_manifold(problem, q, contact, settings);
  REQUIRE(first.converged);
  const ProjectionOutcome again = project_to_manifold(problem, first.q, contact, settings);
  CHECK(again.converged);
  CHECK(again.iterations == 0);
  CHECK(again.q == first.q);
}

TEST_CASE("unreachable contact fails as local minimum or iteration cap") {
  RobotWorld world = point_obstacle_world();
  WorkspaceBounds bounds;
  bounds.dimension = 2;
  bounds.min_corner = Vec3(-2.195, -2.195, 0.0);
  bounds.max_corner = Vec3(2.215, 2.215, 0.0);
  std::vector<Primitive> obstacles{PointPrimitive{Vec3(2.1, 2.1, 0.0)}};  // radius 2.97 > reach 2
  world.sdf = distance_transform(build_occupancy(obstacles, bounds, 0.01));
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);

  Config q(2);
  q << 0.3, -0.4;
  const ProjectionOutcome outcome = project_to_manifold(problem, q, bits({1}), settings);
  CHECK_FALSE(outcome.converged);
  CHECK((outcome.failure == ProjectionFailure::local_minimum ||
         outcome.failure == ProjectionFailure::iteration_cap));
  CHECK(outcome.residual > 0.0);
}

TEST_CASE("uniform sampling covers both manifold components") {
  const RobotWorld world = point_obstacle_world();
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);
  const std::vector<Eigen::Vector2d> ik = oracle::two_link_ik(1.0, 1.0, {1.0, 1.0});

  std::mt19937_64 rng(17);
  SamplerReport report;
  const std::vector<Config> samples =
      sample_uniform_projection(problem, bits({1}), settings, 100, rng, &report);
  REQUIRE(static_cast<int>(samples.size()) == 100);
  CHECK_FALSE(report.shortfall);
  CHECK(report.successes == 100);

  int near_first = 0, near_second = 0;
  for (const Config& q : samples) {
    CHECK(world.chain.within_limits(q));
    CHECK(contact_loss(problem, q, bits({1})) < settings.manifold_tolerance);
    CHECK(min_ik_distance(q, ik) < 0.05);
    if ((q - Config(ik[0])).norm() < 0.05) ++near_first;
    if ((q - Config(ik[1])).norm() < 0.05) ++near_second;
  }
  CHECK(near_first > 0);
  CHECK(near_second > 0);
}

TEST_CASE("uniform sampling of an impossible contact exhausts its budget") {
  RobotWorld world = point_obstacle_world();
  WorkspaceBounds bounds;
  bounds.dimension = 2;
  bounds.min_corner = Vec3(-2.195, -2.195, 0.0);
  bounds.max_corner = Vec3(2.215, 2.215, 0.0);
  std::vector<Primitive> obstacles{PointPrimitive{Vec3(2.1, 2.1, 0.0)}};
  world.sdf = distance_transform(build_occupancy(obstacles, bounds, 0.01));
  const ManifoldProblem problem = world.manifold_problem();
  ProjectionSettings settings = settings_for(world);
  settings.max_retries = 10;

  std::mt19937_64 rng(5);
  SamplerReport report;
  const std::vector<Config> samples =
      sample_uniform_projection(problem, bits({1}), settings, 20, rng, &report);
  CHECK(samples.empty());
  CHECK(report.shortfall);
  CHECK(report.attempts == 10 * 20);
  CHECK(report.failures == report.attempts);
}

TEST_CASE("particle projection keeps modes and drops failures") {
  const RobotWorld world = point_obstacle_world();
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);
  const std::vector<Eigen::Vector2d> ik = oracle::two_link_ik(1.0, 1.0, {1.0, 1.0});

  std::mt19937_64 rng(23);
  std::normal_distribution<double> jitter(0.0, 0.15);
  std::vector<Config> seeds;
  for (int i = 0; i < 30; ++i) {
    const Eigen::Vector2d base = ik[i % 2];
    Config q(2);
    q << base[0] + jitter(rng), base[1] + jitter(rng);
    seeds.push_back(q);
  }

  SamplerReport report;
  const std::vector<Config> samples =
      sample_particle_projection(problem, bits({1}), settings, seeds, &report);
  REQUIRE(static_cast<int>(samples.size()) == report.successes);
  CHECK(report.attempts == 30);
  CHECK(static_cast<int>(samples.size()) > 25);

  // Seeds near a mode stay at that mode.
  int near_first = 0, near_second = 0;
  for (const Config& q : samples) {
    CHECK(contact_loss(problem, q, bits({1})) < settings.manifold_tolerance);
    if ((q - Config(ik[0])).norm() < 0.5) ++near_first;
    if ((q - Config(ik[1])).norm() < 0.5) ++near_second;
  }
  CHECK(near_first > 8);
  CHECK(near_second > 8);
}

TEST_CASE("ball sampling with a vanishing radius reduces to particle projection") {
  const RobotWorld world = point_obstacle_world();
  const ManifoldProblem problem = world.manifold_problem();
  const ProjectionSettings settings = settings_for(world);
  const std::vector<Eigen::Vector2d> ik = oracle::two_link_ik(1.0, 1.0, {1.0, 1.0});

  // Seeds already on the manifold shell, one per component.
  std::vector<Config> seeds;
  for (const Eigen::Vector2d& sol : ik) {
    Config near(2);
    near << sol[0] + 0.02, sol[1] - 0.02;
    const ProjectionOutcome outcome = project_to_manifold(problem, near, bits({1}), settings);
    REQUIRE(outcome.converged);
    seeds.push_back(outcome.q);
  }

  std::mt19937_64 rng(3);
  const std::vector<Config> samples =
      sample_ball_projection(problem, bits({1}), settings, seeds, 1e-9, 40, rng);
  REQUIRE(static_cast<int>(samples.size()) == 40);
  for (const Config& q : samples) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const Config& s : seeds) nearest = std::min(nearest, (q - s).norm());
    CHECK(nearest < 1e-6);
  }
}

TEST_CASE("ball seeds are uniform over the union of overlapping balls") {
  std::vector<Config> seeds;
  Config a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 0.0;
  seeds = {a, b};
  const Config lower = Config::Constant(2, -10.0);
  const Config upper = Config::Constant(2, 10.0);

  // Circles of radius 1 at distance 1: lens area fraction of the union.
  const double lens = 2.0 * std::acos(0.5) - 0.5 * std::sqrt(3.0);
  const double unionarea = 2.0 * M_PI - lens;

  std::mt19937_64 rng(71);
  const int draws = 20000;
  int in_lens = 0, left_only = 0, right_only = 0;
  for (int i = 0; i < draws; ++i) {
    const Config s = draw_ball_seed(seeds, 1.0, lower, upper, rng);
    const bool in_a = (s - a).norm() <= 1.0;
    const bool in_b = (s - b).norm() <= 1.0;
    REQUIRE((in_a || in_b));
    if (in_a && in_b) ++in_lens;
    if (in_a && !in_b) ++left_only;
    if (!in_a && in_b) ++right_only;
  }
  const double lens_expected = lens / unionarea;
  const double sigma = std::sqrt(lens_expected * (1.0 - lens_expected) / draws);
  CHECK(std::abs(static_cast<double>(in_lens) / draws - lens_expected) < 4.0 * sigma);
  // The two exclusive regions are congruent.
  const double exclusive = (M_PI - lens) / unionarea;
  const double sigma_ex = std::sqrt(exclusive * (1.0 - exclusive) / draws);
  CHECK(std::abs(static_cast<double>(left_only) / draws - exclusive) < 4.0 * sigma_ex);
  CHECK(std::abs(static_cast<double>(right_only) / draws - exclusive) < 4.0 * sigma_ex);
}

TEST_CASE("contact vector bookkeeping") {
  const ContactVector none = bits({0, 0, 0});
  CHECK_FALSE(none.any());
  CHECK(none.active_count() == 0);
  const ContactVector some = bits({0, 1, 1});
  CHECK(some.any());
  CHECK(some.active_count() == 2);
  CHECK(some.size() == 3);

  const RobotWorld world = wall_world();
  Config q(2);
  q.setZero();
  CHECK_THROWS_AS(contact_loss(world.manifold_problem(), q, bits({1})), std::invalid_argument);
}
