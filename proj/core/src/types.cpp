#include "graspkit/types.hpp"

#include <cmath>

namespace graspkit {

namespace {
constexpr double kRotationTol = 1e-9;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRotationTol) {
    throw Error("RigidTransform: rotation is not orthonormal (max deviation " +
                std::to_string(ortho) + ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > kRotationTol) {
    throw Error("RigidTransform: rotation determinant is not +1");
  }
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& rotation_vector,
                                               const Vec3& translation) {
  return {rotation_from_axis_angle(rotation_vector), translation};
}

RigidTransform RigidTransform::inverse() const {
  return {rotation_.transpose(), -(rotation_.transpose() * translation_)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Mat3 rotation_from_axis_angle(const Vec3& rotation_vector) {
  const double angle = rotation_vector.norm();
  if (angle < 1e-14) {
    // Second-order expansion keeps the map smooth near zero.
    Mat3 skew;
    skew << 0, -rotation_vector.z(), rotation_vector.y(),
        rotation_vector.z(), 0, -rotation_vector.x(),
        -rotation_vector.y(), rotation_vector.x(), 0;
    Mat3 r = Mat3::Identity() + skew + 0.5 * skew * skew;
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
  }
  return Eigen::AngleAxisd(angle, rotation_vector / angle).toRotationMatrix();
}

Vec3 axis_angle_from_rotation(const Mat3& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

double rotation_geodesic(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int width_,
                                   int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
  if (fx <= 0 || fy <= 0) throw Error("CameraIntrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error("CameraIntrinsics: image size must be positive");
  if (cx < 0 || cx > width || cy < 0 || cy > height) {
    throw Error("CameraIntrinsics: principal point outside image");
  }
}

std::optional<Vec2> project(const Vec3& point, const CameraIntrinsics& K,
                            const RigidTransform& to_camera) {
  const Vec3 c = to_camera.apply(point);
  if (c.z() <= 0) return std::nullopt;
  return Vec2(K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy);
}

Vec3 backproject(const Vec2& pixel, double depth, const CameraIntrinsics& K,
                 const RigidTransform& to_camera) {
  const Vec3 c((pixel.x() - K.cx) / K.fx * depth, (pixel.y() - K.cy) / K.fy * depth, depth);
  return to_camera.inverse().apply(c);
}

}  // namespace graspkit
