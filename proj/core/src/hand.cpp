#include "graspkit/hand.hpp"

#include <algorithm>
#include <cmath>

namespace graspkit {

const std::array<std::array<int, 2>, HandSkeleton::kPhalangeCount>& HandSkeleton::phalanges() {
  static const std::array<std::array<int, 2>, kPhalangeCount> table = [] {
    std::array<std::array<int, 2>, kPhalangeCount> t{};
    int s = 0;
    for (int finger = 0; finger < 5; ++finger) {
      const int base = 1 + 4 * finger;
      t[s++] = {kWrist, base};
      t[s++] = {base, base + 1};
      t[s++] = {base + 1, base + 2};
      t[s++] = {base + 2, base + 3};
    }
    return t;
  }();
  return table;
}

const std::array<int, 6>& HandSkeleton::palm_joints() {
  static const std::array<int, 6> ids = {0, 1, 5, 9, 13, 17};
  return ids;
}

const std::array<int, 5>& HandSkeleton::fingertip_phalanges() {
  static const std::array<int, 5> ids = {3, 7, 11, 15, 19};
  return ids;
}

void HandSkeleton::validate() const {
  for (const Vec3& j : joints) {
    if (!j.allFinite()) throw Error("HandSkeleton: non-finite joint");
  }
}

HandProxy make_hand_proxy(const HandSkeleton& skeleton, const HandProxyConfig& config) {
  if (config.tip_radius <= 0 || config.proximal_radius <= 0 || config.palm_thickness <= 0) {
    throw Error("HandProxyConfig: radii must be positive");
  }
  HandProxy proxy;
  const auto& segments = HandSkeleton::phalanges();
  for (int s = 0; s < HandSkeleton::kPhalangeCount; ++s) {
    const int within_finger = s % 4;  // 0 = wrist->knuckle ... 3 = distal
    const double t = within_finger / 3.0;
    proxy.capsules[s].a = skeleton.joints[segments[s][0]];
    proxy.capsules[s].b = skeleton.joints[segments[s][1]];
    proxy.capsules[s].radius =
        config.proximal_radius + t * (config.tip_radius - config.proximal_radius);
  }
  const auto& palm_ids = HandSkeleton::palm_joints();
  const Vec3& wrist = skeleton.joints[palm_ids[0]];
  for (int k = 0; k < 4; ++k) {
    proxy.palm[k] = {wrist, skeleton.joints[palm_ids[k + 1]], skeleton.joints[palm_ids[k + 2]]};
  }
  proxy.palm_radius = config.palm_thickness / 2.0;
  return proxy;
}

ProxyHit proxy_nearest(const HandProxy& proxy, const Vec3& p) {
  ProxyHit best;
  best.signed_distance = std::numeric_limits<double>::infinity();
  Vec3 best_core = Vec3::Zero();
  double best_radius = 0;
  for (int k = 0; k < HandSkeleton::kPhalangeCount; ++k) {
    const Capsule& cap = proxy.capsules[k];
    const SegmentHit hit = point_segment_distance(p, cap.a, cap.b);
    const double sd = hit.distance - cap.radius;
    if (sd < best.signed_distance) {
      best.signed_distance = sd;
      best.part = k;
      best_core = hit.closest;
      best_radius = cap.radius;
    }
  }
  for (const auto& tri : proxy.palm) {
    const Vec3 cp = closest_point_on_triangle(p, tri[0], tri[1], tri[2]);
    const double sd = (p - cp).norm() - proxy.palm_radius;
    if (sd < best.signed_distance) {
      best.signed_distance = sd;
      best.part = HandProxy::kPalmPart;
      best_core = cp;
      best_radius = proxy.palm_radius;
    }
  }
  Vec3 dir = p - best_core;
  const double len = dir.norm();
  if (len < 1e-12) {
    dir = Vec3::UnitZ();  // on the core; any offset direction works
  } else {
    dir /= len;
  }
  best.surface_point = best_core + best_radius * dir;
  return best;
}

double proxy_signed_distance(const HandProxy& proxy, const Vec3& p) {
  return proxy_nearest(proxy, p).signed_distance;
}

ProxySamples sample_proxy_surface(const HandProxy& proxy, int rings_per_capsule,
                                  int points_per_ring, int samples_per_palm_tri) {
  ProxySamples out;
  for (int k = 0; k < HandSkeleton::kPhalangeCount; ++k) {
    const Capsule& cap = proxy.capsules[k];
    Vec3 axis = cap.b - cap.a;
    const double len = axis.norm();
    Vec3 u, v;
    if (len < 1e-12) {
      axis = Vec3::UnitZ();
    } else {
      axis /= len;
    }
    u = axis.unitOrthogonal();
    v = axis.cross(u);
    for (int r = 0; r < rings_per_capsule; ++r) {
      const double t = rings_per_capsule == 1 ? 0.5 : double(r) / (rings_per_capsule - 1);
      const Vec3 center = cap.a + t * (cap.b - cap.a);
      for (int s = 0; s < points_per_ring; ++s) {
        const double ang = 2.0 * M_PI * s / points_per_ring;
        out.points.push_back(center + cap.radius * (std::cos(ang) * u + std::sin(ang) * v));
        out.parts.push_back(k);
      }
    }
    // hemispherical end caps: latitude rings plus the pole
    const int latitudes = std::max(2, points_per_ring / 4);
    for (int end = 0; end < 2; ++end) {
      const Vec3 center = end == 0 ? cap.a : cap.b;
      const Vec3 pole = (end == 0 ? -1.0 : 1.0) * axis;
      for (int l = 1; l < latitudes; ++l) {
        const double phi = (M_PI / 2.0) * l / latitudes;  // from equator toward pole
        const double ring_r = cap.radius * std::cos(phi);
        const double height = cap.radius * std::sin(phi);
        for (int s = 0; s < points_per_ring; ++s) {
          const double ang = 2.0 * M_PI * s / points_per_ring;
          out.points.push_back(center + height * pole +
                               ring_r * (std::cos(ang) * u + std::sin(ang) * v));
          out.parts.push_back(k);
        }
      }
      out.points.push_back(center + cap.radius * pole);
      out.parts.push_back(k);
    }
  }
  // palm: lattice over each fan triangle, offset to both sides
  const int grid = std::max(1, static_cast<int>(std::round(std::sqrt(samples_per_palm_tri))));
  for (const auto& tri : proxy.palm) {
    const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j + i <= grid; ++j) {
        const double a = double(i) / grid;
        const double b = double(j) / grid;
        const Vec3 base = tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]);
        out.points.push_back(base + proxy.palm_radius * n);
        out.parts.push_back(HandProxy::kPalmPart);
        out.points.push_back(base - proxy.palm_radius * n);
        out.parts.push_back(HandProxy::kPalmPart);
      }
    }
  }
  // rounded rim along the fan boundary (full circles; samples landing inside
  // the slab are harmless)
  const Vec3 corners[6] = {proxy.palm[0][0], proxy.palm[0][1], proxy.palm[0][2],
                           proxy.palm[1][2], proxy.palm[2][2], proxy.palm[3][2]};
  for (int e = 0; e < 6; ++e) {
    const Vec3& a = corners[e];
    const Vec3& b = corners[(e + 1) % 6];
    Vec3 axis = b - a;
    const double len = axis.norm();
    if (len < 1e-12) continue;
    axis /= len;
    const Vec3 u = axis.unitOrthogonal();
    const Vec3 v = axis.cross(u);
    const int rim_rings = std::max(2, grid);
    for (int r = 0; r <= rim_rings; ++r) {
      const Vec3 center = a + (b - a) * (double(r) / rim_rings);
      for (int s = 0; s < points_per_ring; ++s) {
        const double ang = 2.0 * M_PI * s / points_per_ring;
        out.points.push_back(center +
                             proxy.palm_radius * (std::cos(ang) * u + std::sin(ang) * v));
        out.parts.push_back(HandProxy::kPalmPart);
      }
    }
  }
  // spherical corner wedges
  const int corner_lats = std::max(3, points_per_ring / 4);
  for (const Vec3& corner : corners) {
    for (int l = 0; l <= corner_lats; ++l) {
      const double phi = M_PI * l / corner_lats - M_PI / 2.0;
      const double ring_r = proxy.palm_radius * std::cos(phi);
      const double z = proxy.palm_radius * std::sin(phi);
      for (int s = 0; s < points_per_ring; ++s) {
        const double ang = 2.0 * M_PI * s / points_per_ring;
        out.points.push_back(corner +
                             Vec3(ring_r * std::cos(ang), ring_r * std::sin(ang), z));
        out.parts.push_back(HandProxy::kPalmPart);
      }
    }
  }
  return out;
}

namespace {

// Flat right hand, wrist at origin, fingers along +y, palm facing -z.
const JointArray& right_template() {
  static const JointArray joints = [] {
    JointArray j{};
    j[0] = {0.000, 0.000, 0.000};
    // thumb
    j[1] = {0.030, 0.022, -0.008};
    j[2] = {0.055, 0.048, -0.010};
    j[3] = {0.072, 0.068, -0.010};
    j[4] = {0.085, 0.083, -0.010};
    // index
    j[5] = {0.027, 0.095, 0.000};
    j[6] = {0.029, 0.137, 0.000};
    j[7] = {0.030, 0.162, 0.000};
    j[8] = {0.031, 0.184, 0.000};
    // middle
    j[9] = {0.003, 0.100, 0.000};
    j[10] = {0.003, 0.146, 0.000};
    j[11] = {0.003, 0.173, 0.000};
    j[12] = {0.003, 0.196, 0.000};
    // ring
    j[13] = {-0.020, 0.094, 0.000};
    j[14] = {-0.022, 0.137, 0.000};
    j[15] = {-0.023, 0.163, 0.000};
    j[16] = {-0.024, 0.184, 0.000};
    // pinky
    j[17] = {-0.041, 0.085, 0.000};
    j[18] = {-0.044, 0.117, 0.000};
    j[19] = {-0.045, 0.137, 0.000};
    j[20] = {-0.046, 0.153, 0.000};
    return j;
  }();
  return joints;
}

const JointArray& left_template() {
  static const JointArray joints = [] {
    JointArray j = right_template();
    for (Vec3& p : j) p.x() = -p.x();
    return j;
  }();
  return joints;
}

constexpr double kLimitSlack = 1e-9;

}  // namespace

const JointArray& rest_template(Handedness handedness) {
  return handedness == Handedness::kRight ? right_template() : left_template();
}

std::vector<int> limit_violations(const KinematicHand& hand) {
  std::vector<int> bad;
  auto check = [&](int index, double value, double lo, double hi) {
    if (value < lo - kLimitSlack || value > hi + kLimitSlack) bad.push_back(index);
  };
  // packed layout: root rotation 0-2, root translation 3-5, shape 6-11,
  // fingers 12-31 as (abduction, knuckle, middle, distal) x 5
  check(6, hand.shape.global, KinematicHand::kShapeMin, KinematicHand::kShapeMax);
  for (int f = 0; f < 5; ++f) {
    check(7 + f, hand.shape.fingers[f], KinematicHand::kShapeMin, KinematicHand::kShapeMax);
  }
  for (int f = 0; f < 5; ++f) {
    const FingerPose& pose = hand.fingers[f];
    const int base = 12 + 4 * f;
    check(base, pose.abduction, -KinematicHand::kAbductLimit, KinematicHand::kAbductLimit);
    check(base + 1, pose.knuckle_flex, KinematicHand::kFlexMin, KinematicHand::kFlexMax);
    check(base + 2, pose.middle_flex, KinematicHand::kFlexMin, KinematicHand::kFlexMax);
    check(base + 3, pose.distal_flex, KinematicHand::kFlexMin, KinematicHand::kFlexMax);
  }
  return bad;
}

HandSkeleton forward_kinematics(const KinematicHand& hand) {
  const std::vector<int> bad = limit_violations(hand);
  if (!bad.empty()) {
    std::string msg = "forward_kinematics: parameters out of range at indices";
    for (int i : bad) msg += " " + std::to_string(i);
    throw Error(msg);
  }

  const JointArray& tmpl = rest_template(hand.handedness);
  const Mat3 root = rotation_from_axis_angle(hand.root_rotation);
  // Both templates are flat in z = 0 with the palm side at -z.
  const Vec3 palm_out(0, 0, -1);

  HandSkeleton out;
  out.handedness = hand.handedness;
  out.joints[0] = hand.root_translation;

  for (int f = 0; f < 5; ++f) {
    const double scale = hand.shape.global * hand.shape.fingers[f];
    const int knuckle = HandSkeleton::knuckle(f);
    const Vec3 bones[4] = {tmpl[knuckle] - tmpl[0], tmpl[knuckle + 1] - tmpl[knuckle],
                           tmpl[knuckle + 2] - tmpl[knuckle + 1],
                           tmpl[knuckle + 3] - tmpl[knuckle + 2]};
    // One flexion axis per finger, from the template proximal bone.
    const Vec3 flex_axis = bones[1].normalized().cross(palm_out).normalized();
    const FingerPose& pose = hand.fingers[f];

    Mat3 chain = root;
    Vec3 cursor = out.joints[0];
    cursor += chain * (scale * bones[0]);
    out.joints[knuckle] = cursor;

    chain = chain * rotation_from_axis_angle(palm_out * pose.abduction) *
            rotation_from_axis_angle(flex_axis * pose.knuckle_flex);
    cursor += chain * (scale * bones[1]);
    out.joints[knuckle + 1] = cursor;

    chain = chain * rotation_from_axis_angle(flex_axis * pose.middle_flex);
    cursor += chain * (scale * bones[2]);
    out.joints[knuckle + 2] = cursor;

    chain = chain * rotation_from_axis_angle(flex_axis * pose.distal_flex);
    cursor += chain * (scale * bones[3]);
    out.joints[knuckle + 3] = cursor;
  }
  return out;
}

}  // namespace graspkit
