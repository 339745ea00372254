#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "mpf/core.hpp"

namespace mpf {

// One revolute joint: rotation about `axis` (unit length, expressed in the
// parent frame) after a fixed translation `parent_offset` from the parent
// joint origin. Link i is the segment rooted at joint i.
struct JointSpec {
  Vec3 axis = Vec3::UnitZ();
  Vec3 parent_offset = Vec3::Zero();
  double lower = -M_PI;
  double upper = M_PI;
};

struct ChainModel {
  std::vector<JointSpec> joints;
  int dimension = 3;  // 2 for planar chains; poses still carry full 3D frames

  int joint_count() const { return static_cast<int>(joints.size()); }
  Config lower_limits() const;
  Config upper_limits() const;
  Config clamp_to_limits(const Config& q) const;
  bool within_limits(const Config& q) const;
};

// A point rigidly attached to a link, with an optional sensing/collision
// radius (0 = point).
struct SensorSpec {
  int link_index = 0;
  Vec3 local_offset = Vec3::Zero();
  double radius = 0.0;
};

struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// World poses of every link frame. The frame of link j has its origin at
// joint j and includes the rotation of joint j itself.
void forward_kinematics(const ChainModel& chain, const Config& q, std::vector<Pose>& poses);
std::vector<Pose> forward_kinematics(const ChainModel& chain, const Config& q);

Vec3 sensor_center(const std::vector<Pose>& poses, const SensorSpec& sensor);
std::vector<Vec3> sensor_centers(const ChainModel& chain, const Config& q,
                                 const std::vector<SensorSpec>& sensors);

// Jacobian of the sensor center position with respect to q, one column per
// joint. Columns past the sensor's link are zero. Rows are x, y, z even for
// planar chains (the z row is then zero).
void linear_jacobian(const ChainModel& chain, const std::vector<Pose>& poses,
                     const SensorSpec& sensor, Eigen::Matrix3Xd& jacobian);
Eigen::Matrix3Xd linear_jacobian(const ChainModel& chain, const Config& q,
                                 const SensorSpec& sensor);

}  // namespace mpf
