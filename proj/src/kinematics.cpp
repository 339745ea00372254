#include "mpf/kinematics.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpf {

Config ChainModel::lower_limits() const {
  Config q(joint_count());
  for (int j = 0; j < joint_count(); ++j) q[j] = joints[j].lower;
  return q;
}

Config ChainModel::upper_limits() const {
  Config q(joint_count());
  for (int j = 0; j < joint_count(); ++j) q[j] = joints[j].upper;
  return q;
}

Config ChainModel::clamp_to_limits(const Config& q) const {
  Config out = q;
  for (int j = 0; j < joint_count(); ++j) {
    out[j] = std::clamp(out[j], joints[j].lower, joints[j].upper);
  }
  return out;
}

bool ChainModel::within_limits(const Config& q) const {
  for (int j = 0; j < joint_count(); ++j) {
    if (q[j] < joints[j].lower || q[j] > joints[j].upper) return false;
  }
  return true;
}

void forward_kinematics(const ChainModel& chain, const Config& q, std::vector<Pose>& poses) {
  const int n = chain.joint_count();
  if (q.size() != n) throw std::invalid_argument("forward_kinematics: configuration size mismatch");
  poses.resize(n);
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
  for (int j = 0; j < n; ++j) {
    const JointSpec& joint = chain.joints[j];
    translation += rotation * joint.parent_offset;
    rotation = rotation * Eigen::AngleAxisd(q[j], joint.axis).toRotationMatrix();
    poses[j].rotation = rotation;
    poses[j].translation = translation;
  }
}

std::vector<Pose> forward_kinematics(const ChainModel& chain, const Config& q) {
  std::vector<Pose> poses;
  forward_kinematics(chain, q, poses);
  return poses;
}

Vec3 sensor_center(const std::vector<Pose>& poses, const SensorSpec& sensor) {
  return poses[sensor.link_index].apply(sensor.local_offset);
}

std::vector<Vec3> sensor_centers(const ChainModel& chain, const Config& q,
                                 const std::vector<SensorSpec>& sensors) {
  const std::vector<Pose> poses = forward_kinematics(chain, q);
  std::vector<Vec3> centers;
  centers.reserve(sensors.size());
  for (const SensorSpec& sensor : sensors) {
    if (sensor.link_index < 0 || sensor.link_index >= chain.joint_count()) {
      throw std::invalid_argument("sensor_centers: link index out of range");
    }
    centers.push_back(sensor_center(poses, sensor));
  }
  return centers;
}

void linear_jacobian(const ChainModel& chain, const std::vector<Pose>& poses,
                     const SensorSpec& sensor, Eigen::Matrix3Xd& jacobian) {
  const int n = chain.joint_count();
  if (sensor.link_index < 0 || sensor.link_index >= n) {
    throw std::invalid_argument("linear_jacobian: link index out of range");
  }
  jacobian.resize(3, n);
  const Vec3 point = sensor_center(poses, sensor);
  for (int j = 0; j <= sensor.link_index; ++j) {
    const Vec3 axis_world = poses[j].rotation * chain.joints[j].axis;
    jacobian.col(j) = axis_world.cross(point - poses[j].translation);
  }
  for (int j = sensor.link_index + 1; j < n; ++j) jacobian.col(j).setZero();
}

Eigen::Matrix3Xd linear_jacobian(const ChainModel& chain, const Config& q,
                                 const SensorSpec& sensor) {
  Eigen::Matrix3Xd jacobian;
  linear_jacobian(chain, forward_kinematics(chain, q), sensor, jacobian);
  return jacobian;
}

}  // namespace mpf
