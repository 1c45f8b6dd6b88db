#pragma once

#include <memory>
#include <string>
#include <vector>

#include "graspkit/analysis.hpp"
#include "graspkit/contact.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/mlp.hpp"
#include "graspkit/reconstruct.hpp"

namespace graspkit {

enum class ObjectKind { kSphere, kBox, kCylinder, kTorus };
ObjectKind object_kind_from_name(const std::string& name);
std::string object_kind_name(ObjectKind kind);

struct ObjectSpec {
  ObjectKind kind = ObjectKind::kSphere;
  // sphere: size.x = radius; box: extents; cylinder: (radius, height);
  // torus: (major radius, minor radius)
  Vec3 size = Vec3(0.04, 0.04, 0.04);
};

struct NoiseModel {
  double detection_sigma_px = 0.0;
  double pose_outlier_fraction = 0.0;     // frames with corrupted stored pose
  double detection_outlier_fraction = 0.0;  // frames with scrambled detections
  double dropout_rate = 0.0;              // per-joint missing detections
};

struct SynthScenario {
  ObjectSpec object;
  int cameras = 3;
  int frames = 50;
  NoiseModel noise;
  uint64_t seed = 0;

  double hand_scale = 1.0;
  double contact_falloff = 0.004;  // meters; thermal-like decay scale
  int cloud_points = 0;            // 0 = sized from surface area

  std::string object_id;  // defaults to the object kind name
  Intent intent = Intent::kUse;
  int participant = 0;

  void validate() const;
};

struct SynthGrasp {
  GraspObservation observation;
  JointArray gt_joints{};  // object frame
  KinematicHand gt_hand;
  std::shared_ptr<const TriMesh> object_mesh;
  ContactMap vertex_contact;  // per mesh vertex
  PointCloud cloud;
  ContactMap cloud_contact;  // aligned with the cloud
  std::vector<int> corrupted_pose_frames;
  std::vector<int> corrupted_detection_frames;
  GraspRecord record;        // analysis-ready view of the same grasp
  GraspSample sample;        // learner-ready view
};

/// Deterministic synthetic grasp: a posed hand closed onto a parametric
/// object, a proximity-derived contact map, and noisy multi-view detections.
/// Throws when the hand cannot reach contact within joint limits.
SynthGrasp generate(const SynthScenario& scenario);

/// Point count heuristic for a mesh: proportional to surface area, clamped
/// to the 1K-30K range.
int auto_cloud_points(const TriMesh& mesh);

struct SweepRow {
  double value = 0;
  int repeats = 0;
  double mean_joint_error_m = 0;
  int failures = 0;
};

/// One generate + reconstruct per (value, repeat); per-cell failures are
/// recorded, not fatal. Axis is one of "noise", "outliers", "cameras".
std::vector<SweepRow> sweep(const SynthScenario& base, const std::string& axis,
                            std::span<const double> values, int repeats = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& axis);

}  // namespace graspkit
