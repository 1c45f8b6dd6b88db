#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <stdexcept>
#include <string>

namespace graspkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Proper rigid motion. Construction rejects matrices that are not
/// rotations (det +1, orthonormal within 1e-9).
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);
  static RigidTransform from_axis_angle(const Vec3& rotation_vector, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;
  Mat4 matrix() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Axis-angle to rotation matrix (Rodrigues).
Mat3 rotation_from_axis_angle(const Vec3& rotation_vector);
/// Rotation matrix to axis-angle.
Vec3 axis_angle_from_rotation(const Mat3& rotation);
/// Geodesic distance between two rotations, radians.
double rotation_geodesic(const Mat3& a, const Mat3& b);

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height);
};

/// Pinhole projection of a point expressed in the frame mapped to the camera
/// by `to_camera`. Empty when the transformed point has non-positive depth.
std::optional<Vec2> project(const Vec3& point, const CameraIntrinsics& K,
                            const RigidTransform& to_camera);

/// Inverse of project at a known camera-frame depth.
Vec3 backproject(const Vec2& pixel, double depth, const CameraIntrinsics& K,
                 const RigidTransform& to_camera);

}  // namespace graspkit
