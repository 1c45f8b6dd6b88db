#pragma once

#include <array>
#include <optional>
#include <vector>

#include "graspkit/mesh.hpp"
#include "graspkit/types.hpp"

namespace graspkit {

enum class Handedness { kLeft, kRight };

using JointArray = std::array<Vec3, 21>;

/// 21-joint hand skeleton: wrist, then four joints per finger in
/// thumb/index/middle/ring/pinky order, knuckle to tip.
struct HandSkeleton {
  static constexpr int kJointCount = 21;
  static constexpr int kPhalangeCount = 20;
  static constexpr int kWrist = 0;

  Handedness handedness = Handedness::kRight;
  JointArray joints{};

  /// 20 segments: wrist->knuckle plus the three bone segments per finger.
  static const std::array<std::array<int, 2>, kPhalangeCount>& phalanges();
  /// Wrist plus the five knuckles; used for rigid palm alignment.
  static const std::array<int, 6>& palm_joints();
  static int knuckle(int finger) { return 1 + 4 * finger; }
  static int fingertip(int finger) { return 4 + 4 * finger; }
  /// Phalange ids whose distal joint is a fingertip.
  static const std::array<int, 5>& fingertip_phalanges();

  void validate() const;
};

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0;
};

struct HandProxyConfig {
  double tip_radius = 0.007;       // distal capsule, meters
  double proximal_radius = 0.010;  // wrist->knuckle capsule
  double palm_thickness = 0.025;
};

/// Capsules along the phalanges plus a thickened triangle fan over the palm;
/// stands in for a full hand mesh in distance queries.
struct HandProxy {
  static constexpr int kPalmPart = 20;

  std::array<Capsule, HandSkeleton::kPhalangeCount> capsules{};
  std::array<std::array<Vec3, 3>, 4> palm{};
  double palm_radius = 0;
};

HandProxy make_hand_proxy(const HandSkeleton& skeleton, const HandProxyConfig& config = {});

/// Negative inside. Exact for capsules; the palm slab is the offset of its
/// triangle fan.
double proxy_signed_distance(const HandProxy& proxy, const Vec3& p);

struct ProxyHit {
  double signed_distance = 0;
  int part = -1;  // capsule index, or HandProxy::kPalmPart
  Vec3 surface_point = Vec3::Zero();
};
ProxyHit proxy_nearest(const HandProxy& proxy, const Vec3& p);

/// Deterministic surface sampling with stable per-sample ids across poses of
/// the same layout (ids index the (part, u, v) lattice).
struct ProxySamples {
  std::vector<Vec3> points;
  std::vector<int> parts;
};
ProxySamples sample_proxy_surface(const HandProxy& proxy, int rings_per_capsule = 6,
                                  int points_per_ring = 8, int samples_per_palm_tri = 16);

/// Shape: one global scale plus a per-finger bone-length scale.
struct ShapeParams {
  double global = 1.0;
  std::array<double, 5> fingers{1, 1, 1, 1, 1};
};

/// Per-finger articulation, radians. Knuckles get abduction + flexion, the
/// two distal joints flexion only.
struct FingerPose {
  double abduction = 0;
  double knuckle_flex = 0;
  double middle_flex = 0;
  double distal_flex = 0;
};

struct KinematicHand {
  static constexpr double kFlexMin = -30.0 * M_PI / 180.0;
  static constexpr double kFlexMax = 110.0 * M_PI / 180.0;
  static constexpr double kAbductLimit = 30.0 * M_PI / 180.0;
  static constexpr double kShapeMin = 0.25;
  static constexpr double kShapeMax = 4.0;

  Handedness handedness = Handedness::kRight;
  ShapeParams shape;
  Vec3 root_rotation = Vec3::Zero();  // axis-angle
  Vec3 root_translation = Vec3::Zero();
  std::array<FingerPose, 5> fingers{};
};

/// Rest template joints (flat hand, wrist at origin, fingers along +y,
/// palm facing -z for a right hand).
const JointArray& rest_template(Handedness handedness);

/// Indices (into the packed 32-parameter vector) of out-of-range parameters.
std::vector<int> limit_violations(const KinematicHand& hand);

/// Chains root transform, per-finger scaled bones and joint rotations.
/// Throws when parameters violate shape or angle limits.
HandSkeleton forward_kinematics(const KinematicHand& hand);

struct HandFitResult {
  KinematicHand hand;
  HandSkeleton fitted;
  Eigen::Matrix<double, 21, 1> joint_errors;  // meters, per joint
  double objective = 0;
  std::vector<double> objective_trace;  // accepted iterations
};

/// Fits shape and pose so the model joints match the target, with the shape
/// deviation regularized by 1/sigma. Initialization rigidly aligns the wrist
/// and the five knuckles before optimizing.
HandFitResult fit_hand(const HandSkeleton& target, double sigma = 10.0);

}  // namespace graspkit
