#pragma once

#include <optional>
#include <span>
#include <vector>

#include "graspkit/hand.hpp"
#include "graspkit/types.hpp"

namespace graspkit {

/// Per-frame, per-camera 2D joint detections. Missing joints carry
/// confidence 0.
struct Detection2D {
  int frame = 0;
  int camera = 0;
  std::array<Vec3, 21> joints{};  // (u, v, confidence)

  void validate() const;
};

struct CameraView {
  CameraIntrinsics intrinsics;
  RigidTransform world_to_camera;
};

struct FramePose {
  RigidTransform object_to_world;
  bool valid = true;
};

/// A grasp observed through N frames from C cameras with known object poses.
struct GraspObservation {
  std::vector<CameraView> cameras;
  std::vector<FramePose> frames;
  std::vector<Detection2D> detections;

  void validate() const;
  const Detection2D* find(int frame, int camera) const;
};

struct PairId {
  int frame = 0;
  int camera = 0;
  friend bool operator==(const PairId&, const PairId&) = default;
  friend auto operator<=>(const PairId&, const PairId&) = default;
};

struct RansacParams {
  double inlier_px = 12.0;
  int iterations = 500;
  uint64_t seed = 0;
  double huber_delta_px = 5.0;
  int min_inlier_pairs = 3;
  bool refine_after_rescue = false;
};

struct ReconstructionResult {
  JointArray joints{};  // object frame
  std::vector<PairId> inliers;
  std::vector<double> inlier_errors_px;  // mean joint reprojection error per inlier
  double mean_reprojection_px = 0;

  struct Rescue {
    int frame = 0;
    RigidTransform pose;  // re-estimated object-to-world
  };
  std::vector<Rescue> rescued;
};

/// Per-joint robust residuals of one detection: Huber of the
/// confidence-scaled reprojection error. Joints behind the camera are
/// excluded and flagged.
struct ResidualReport {
  std::array<double, 21> robust{};       // huber(|err| * sqrt(w))
  std::array<double, 21> pixel_error{};  // raw |err|, px
  std::array<bool, 21> used{};
  std::array<bool, 21> behind_camera{};
  double total = 0;
};
ResidualReport residual(const JointArray& joints, const Detection2D& detection,
                        const CameraView& camera, const RigidTransform& object_to_world,
                        double huber_delta_px = 5.0);

double huber(double e, double delta);

/// Homogeneous DLT triangulation per joint over the given pairs. Joints seen
/// in fewer than two views, or with a degenerate baseline, come back empty.
std::array<std::optional<Vec3>, 21> triangulate_init(const GraspObservation& obs,
                                                     std::span<const PairId> subset);

/// Robust refinement of all joints over the inlier pairs
/// (Levenberg-Marquardt on the Huber cost, per joint). Throws when no joint
/// has a usable observation.
JointArray optimize_joints(const JointArray& init, const GraspObservation& obs,
                           std::span<const PairId> inliers, double huber_delta_px = 5.0);

/// Mean reprojection error of one pair over its detected joints, px.
/// Empty when every detected joint is behind the camera.
std::optional<double> pair_mean_error(const JointArray& joints, const GraspObservation& obs,
                                      const PairId& pair);

/// Object pose from 2D<->3D joint correspondences of a single detection
/// (DLT initialization, weighted nonlinear refinement).
RigidTransform pnp_pose(const Detection2D& detection, const JointArray& joints,
                        const CameraView& camera);

ReconstructionResult ransac_reconstruct(const GraspObservation& obs, const RansacParams& params);

/// Re-estimates object pose for frames that failed the inlier test, from
/// their detections and the fitted joints, and re-tests them. Joints are
/// only re-optimized when params.refine_after_rescue is set.
ReconstructionResult second_pass_rescue(const ReconstructionResult& result,
                                        const GraspObservation& obs,
                                        const RansacParams& params);

}  // namespace graspkit
