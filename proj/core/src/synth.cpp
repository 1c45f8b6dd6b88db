#include "graspkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "graspkit/bvh.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

ObjectKind object_kind_from_name(const std::string& name) {
  if (name == "sphere") return ObjectKind::kSphere;
  if (name == "box") return ObjectKind::kBox;
  if (name == "cylinder") return ObjectKind::kCylinder;
  if (name == "torus") return ObjectKind::kTorus;
  throw Error("unknown object kind: " + name);
}

std::string object_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kSphere: return "sphere";
    case ObjectKind::kBox: return "box";
    case ObjectKind::kCylinder: return "cylinder";
    case ObjectKind::kTorus: return "torus";
  }
  throw Error("unknown object kind");
}

void SynthScenario::validate() const {
  if (frames < 2) throw Error("SynthScenario: needs at least 2 frames");
  if (cameras < 1) throw Error("SynthScenario: needs at least 1 camera");
  if (noise.detection_sigma_px < 0 || noise.pose_outlier_fraction < 0 ||
      noise.detection_outlier_fraction < 0 || noise.dropout_rate < 0) {
    throw Error("SynthScenario: noise parameters must be non-negative");
  }
  if (hand_scale <= 0 || contact_falloff <= 0) {
    throw Error("SynthScenario: scales must be positive");
  }
}

int auto_cloud_points(const TriMesh& mesh) {
  const int n = static_cast<int>(std::round(mesh.surface_area() * 2.0e5));
  return std::clamp(n, 1000, 30000);
}

namespace {

TriMesh build_object(const ObjectSpec& spec) {
  switch (spec.kind) {
    case ObjectKind::kSphere: return make_icosphere(spec.size.x(), 3);
    case ObjectKind::kBox: return make_box(spec.size, 12);
    case ObjectKind::kCylinder: return make_cylinder(spec.size.x(), spec.size.y());
    case ObjectKind::kTorus: return make_torus(spec.size.x(), spec.size.y());
  }
  throw Error("build_object: unknown kind");
}

// Distance from a fingertip capsule to the mesh surface (negative when the
// capsule overlaps the surface).
double fingertip_clearance(const MeshBvh& bvh, const HandSkeleton& skeleton, int finger,
                           double tip_radius) {
  const int tip = HandSkeleton::fingertip(finger);
  const Vec3& a = skeleton.joints[tip - 1];
  const Vec3& b = skeleton.joints[tip];
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= 4; ++s) {
    const Vec3 p = a + (b - a) * (s / 4.0);
    best = std::min(best, bvh.nearest(p).distance - tip_radius);
  }
  return best;
}

// Closes the fingers onto the object by scaling flexion until each fingertip
// capsule touches the surface, capped at the joint limits.
KinematicHand close_hand(const MeshBvh& bvh, const SynthScenario& scenario,
                         double object_radius_y, int* touching_out) {
  KinematicHand hand;
  hand.handedness = Handedness::kRight;
  hand.shape.global = scenario.hand_scale;

  // Template fingers point +y with the palm at -z; stand it up so fingers
  // point +z and the palm faces the object at the origin.
  const Mat3 stand = Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitX()).toRotationMatrix();
  hand.root_rotation = axis_angle_from_rotation(stand);
  const double s = scenario.hand_scale;
  hand.root_translation = Vec3(0.0, -(object_radius_y + 0.030 * s), -0.055 * s);

  const double curl_ratio[3] = {1.0, 0.85, 0.65};
  std::array<double, 5> curl{};
  std::array<bool, 5> touching{};

  const HandProxyConfig proxy_config;
  for (int step = 0; step <= 60; ++step) {
    bool advanced = false;
    for (int f = 0; f < 5; ++f) {
      if (touching[f]) continue;
      if (curl[f] >= 1.0) continue;
      curl[f] = std::min(1.0, curl[f] + 1.0 / 55.0);
      hand.fingers[f].knuckle_flex = curl[f] * curl_ratio[0] * KinematicHand::kFlexMax;
      hand.fingers[f].middle_flex = curl[f] * curl_ratio[1] * KinematicHand::kFlexMax;
      hand.fingers[f].distal_flex = curl[f] * curl_ratio[2] * KinematicHand::kFlexMax;
      const HandSkeleton posed = forward_kinematics(hand);
      if (fingertip_clearance(bvh, posed, f, proxy_config.tip_radius) <= 5e-4) {
        touching[f] = true;
      }
      advanced = true;
    }
    if (!advanced) break;
  }

  int count = 0;
  for (bool t : touching) count += t ? 1 : 0;
  if (touching_out) *touching_out = count;
  return hand;
}

RigidTransform look_at(const Vec3& position, const Vec3& target) {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-6) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 rotation;
  rotation.row(0) = right.transpose();
  rotation.row(1) = down.transpose();
  rotation.row(2) = forward.transpose();
  return {rotation, -(rotation * position)};
}

}  // namespace

SynthGrasp generate(const SynthScenario& scenario) {
  scenario.validate();
  const Rng base(scenario.seed);

  SynthGrasp out;
  TriMesh mesh = build_object(scenario.object);
  out.object_mesh = std::make_shared<TriMesh>(std::move(mesh));
  const MeshBvh bvh(*out.object_mesh);

  // Reach of the object toward the approaching palm (-y side).
  const double radius_y = -out.object_mesh->bounds().min().y();

  int touching = 0;
  out.gt_hand = close_hand(bvh, scenario, radius_y, &touching);
  if (touching < 3) {
    throw Error("generate: infeasible scenario, only " + std::to_string(touching) +
                " fingertips reach the object");
  }
  const HandSkeleton skeleton = forward_kinematics(out.gt_hand);
  out.gt_joints = skeleton.joints;
  const HandProxy proxy = make_hand_proxy(skeleton);

  // Contact from proximity to the hand surface, thermal-like linear decay.
  auto contact_at = [&](const Vec3& p) {
    const double sd = proxy_signed_distance(proxy, p);
    return std::clamp((scenario.contact_falloff - sd) / scenario.contact_falloff, 0.0, 1.0);
  };
  {
    std::vector<double> values(out.object_mesh->vertices().size());
    for (size_t v = 0; v < values.size(); ++v) {
      values[v] = contact_at(out.object_mesh->vertices()[v]);
    }
    out.vertex_contact = ContactMap(std::move(values));
  }

  const int n_points =
      scenario.cloud_points > 0 ? scenario.cloud_points : auto_cloud_points(*out.object_mesh);
  out.cloud = sample_surface(*out.object_mesh, n_points, base.derive(20).next_u64());
  {
    std::vector<double> values(out.cloud.size());
    for (int i = 0; i < out.cloud.size(); ++i) values[i] = contact_at(out.cloud.points[i]);
    out.cloud_contact = ContactMap(std::move(values));
  }

  // Camera ring.
  for (int c = 0; c < scenario.cameras; ++c) {
    const double azimuth = 2.0 * M_PI * c / scenario.cameras;
    const double elevation = 25.0 * M_PI / 180.0;
    const double rho = 0.55;
    const Vec3 pos(rho * std::cos(elevation) * std::cos(azimuth),
                   rho * std::cos(elevation) * std::sin(azimuth), rho * std::sin(elevation));
    CameraView view{CameraIntrinsics(1100, 1100, 960, 540, 1920, 1080), look_at(pos, Vec3::Zero())};
    out.observation.cameras.push_back(view);
  }

  // Smooth trajectory of true object poses.
  Rng traj_rng = base.derive(10);
  const Vec3 spin_axis = traj_rng.unit_vector();
  const Vec3 wobble_axis = traj_rng.unit_vector();
  std::vector<RigidTransform> true_poses;
  for (int i = 0; i < scenario.frames; ++i) {
    const double t = static_cast<double>(i) / scenario.frames;
    const Mat3 rotation =
        (Eigen::AngleAxisd(2.0 * M_PI * 0.8 * t, spin_axis) *
         Eigen::AngleAxisd(0.35 * std::sin(2.0 * M_PI * t), wobble_axis))
            .toRotationMatrix();
    const Vec3 translation(0.06 * std::sin(2.0 * M_PI * t), 0.05 * std::cos(4.0 * M_PI * t),
                           0.04 * std::sin(6.0 * M_PI * t));
    true_poses.emplace_back(rotation, translation);
    out.observation.frames.push_back({true_poses.back(), true});
  }

  // Plant corrupted stored poses.
  Rng corrupt_rng = base.derive(11);
  std::vector<int> frame_order(scenario.frames);
  for (int i = 0; i < scenario.frames; ++i) frame_order[i] = i;
  corrupt_rng.shuffle(frame_order);
  const int n_bad_pose =
      static_cast<int>(std::round(scenario.noise.pose_outlier_fraction * scenario.frames));
  const int n_bad_det =
      static_cast<int>(std::round(scenario.noise.detection_outlier_fraction * scenario.frames));
  if (n_bad_pose + n_bad_det > scenario.frames) {
    throw Error("generate: outlier fractions exceed the frame count");
  }
  for (int k = 0; k < n_bad_pose; ++k) {
    const int frame = frame_order[k];
    out.corrupted_pose_frames.push_back(frame);
    const double angle = corrupt_rng.uniform(0.6, 2.5);
    const Mat3 bad_rotation =
        Eigen::AngleAxisd(angle, corrupt_rng.unit_vector()).toRotationMatrix() *
        true_poses[frame].rotation();
    const Vec3 bad_translation =
        true_poses[frame].translation() + 0.08 * corrupt_rng.unit_vector();
    out.observation.frames[frame].object_to_world = RigidTransform(bad_rotation, bad_translation);
  }
  std::vector<bool> scrambled(scenario.frames, false);
  for (int k = 0; k < n_bad_det; ++k) {
    const int frame = frame_order[n_bad_pose + k];
    out.corrupted_detection_frames.push_back(frame);
    scrambled[frame] = true;
  }
  std::sort(out.corrupted_pose_frames.begin(), out.corrupted_pose_frames.end());
  std::sort(out.corrupted_detection_frames.begin(), out.corrupted_detection_frames.end());

  // Detections from the true poses.
  const double sigma = scenario.noise.detection_sigma_px;
  for (int i = 0; i < scenario.frames; ++i) {
    for (int c = 0; c < scenario.cameras; ++c) {
      Rng det_rng = base.derive(1000 + static_cast<uint64_t>(i) * 64 + c);
      Detection2D det;
      det.frame = i;
      det.camera = c;
      const RigidTransform chain = out.observation.cameras[c].world_to_camera * true_poses[i];
      for (int j = 0; j < 21; ++j) {
        const auto px = project(out.gt_joints[j], out.observation.cameras[c].intrinsics, chain);
        if (!px) {
          det.joints[j] = Vec3(0, 0, 0);
          continue;
        }
        double u = px->x(), v = px->y();
        double w = 1.0;
        if (scrambled[i]) {
          u += det_rng.normal() * 80.0;
          v += det_rng.normal() * 80.0;
        } else if (sigma > 0) {
          const double nu = det_rng.normal() * sigma;
          const double nv = det_rng.normal() * sigma;
          u += nu;
          v += nv;
          w = std::clamp(std::exp(-(nu * nu + nv * nv) / (2.0 * sigma * sigma)), 0.1, 1.0);
        }
        if (scenario.noise.dropout_rate > 0 &&
            det_rng.uniform() < scenario.noise.dropout_rate) {
          det.joints[j] = Vec3(0, 0, 0);
          continue;
        }
        det.joints[j] = Vec3(u, v, w);
      }
      out.observation.detections.push_back(det);
    }
  }

  out.record.object_id =
      scenario.object_id.empty() ? object_kind_name(scenario.object.kind) : scenario.object_id;
  out.record.intent = scenario.intent;
  out.record.participant = scenario.participant;
  out.record.mesh = out.object_mesh;
  out.record.contact = out.vertex_contact;
  out.record.hands = {skeleton};

  out.sample.points = out.cloud;
  out.sample.contact = out.cloud_contact;
  out.sample.hands = {skeleton};
  out.sample.mesh = *out.object_mesh;
  out.sample.mesh_contact = out.vertex_contact;
  return out;
}

std::vector<SweepRow> sweep(const SynthScenario& base, const std::string& axis,
                            std::span<const double> values, int repeats) {
  if (axis != "noise" && axis != "outliers" && axis != "cameras") {
    throw Error("sweep: axis must be one of noise|outliers|cameras");
  }
  if (repeats < 1) throw Error("sweep: repeats must be >= 1");

  std::vector<SweepRow> rows;
  for (size_t vi = 0; vi < values.size(); ++vi) {
    SweepRow row;
    row.value = values[vi];
    row.repeats = repeats;
    double total = 0;
    int ok = 0;
    for (int r = 0; r < repeats; ++r) {
      SynthScenario scenario = base;
      scenario.seed = Rng(base.seed).derive(7000 + vi * 977 + r).next_u64();
      if (axis == "noise") scenario.noise.detection_sigma_px = values[vi];
      else if (axis == "outliers") scenario.noise.pose_outlier_fraction = values[vi];
      else scenario.cameras = std::max(1, static_cast<int>(std::round(values[vi])));
      try {
        const SynthGrasp grasp = generate(scenario);
        RansacParams params;
        params.seed = Rng(scenario.seed).derive(1).next_u64();
        const ReconstructionResult result = ransac_reconstruct(grasp.observation, params);
        double err = 0;
        for (int j = 0; j < 21; ++j) err += (result.joints[j] - grasp.gt_joints[j]).norm();
        total += err / 21.0;
        ++ok;
      } catch (const Error&) {
        ++row.failures;
      }
    }
    row.mean_joint_error_m = ok > 0 ? total / ok : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& axis) {
  std::ostringstream out;
  out << axis << ",repeats,mean_joint_error_m,failures\n";
  out.precision(12);
  for (const SweepRow& row : rows) {
    out << row.value << ',' << row.repeats << ',' << row.mean_joint_error_m << ','
        << row.failures << '\n';
  }
  return out.str();
}

}  // namespace graspkit
