#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/voxel.hpp"

namespace graspkit {

enum class FeatureFamily { kSimpleJoints, kRelativeJoints, kSkeleton, kMesh };

int feature_dim(FeatureFamily family);  // 63 / 66 / 40 / 23
std::string family_name(FeatureFamily family);
FeatureFamily family_from_name(const std::string& name);

struct DropoutRecord {
  bool applied = false;
  Vec3 camera_position = Vec3::Zero();
  std::vector<std::vector<int>> dropped_joints;  // per hand
};

/// Per-point hand-pose features. Rows align with the source point cloud.
struct FeatureMatrix {
  FeatureFamily family = FeatureFamily::kSimpleJoints;
  Eigen::MatrixXd values;             // rows x feature_dim(family)
  std::vector<int> hand_index;        // hand selected per row
  std::vector<int> mesh_closest_part; // kMesh only: proxy part behind cols 0-1
  DropoutRecord dropout;
};

/// Absolute joint coordinates of the hand closest to each point (63-d).
FeatureMatrix simple_joints(const PointCloud& points, const std::vector<HandSkeleton>& hands);

/// Point-to-joint offset vectors plus the surface normal (66-d).
FeatureMatrix relative_joints(const PointCloud& points, const std::vector<HandSkeleton>& hands);

/// Distance to each phalange segment and the normal-alignment of the offset
/// direction: 20 lengths then 20 dot products (40-d).
FeatureMatrix skeleton_features(const PointCloud& points,
                                const std::vector<HandSkeleton>& hands);

/// Distance and normal-alignment to the closest hand-proxy surface point
/// plus 21 joint distances (23-d).
FeatureMatrix mesh_features(const PointCloud& points, const std::vector<HandSkeleton>& hands,
                            const std::vector<HandProxy>& proxies);

/// Dispatch on the family; proxies required only for kMesh.
FeatureMatrix compute_features(FeatureFamily family, const PointCloud& points,
                               const std::vector<HandSkeleton>& hands,
                               const std::vector<HandProxy>& proxies = {});

/// Simulated occlusion: zeroes every feature entry attributable to the 4
/// joints farthest from a camera position sampled on a sphere around the
/// grasp. Deterministic per seed.
FeatureMatrix occlusion_dropout(const FeatureMatrix& features,
                                const std::vector<HandSkeleton>& hands, uint64_t seed);

constexpr int kDropoutJointsPerHand = 4;  // ceil(0.15 * 21)

/// Features evaluated at the given voxel centers with the occupancy bit
/// appended; interior voxels get zeroed hand features. Normals come from the
/// nearest mesh surface point.
Eigen::MatrixXd voxel_features_at(const VoxelGrid& grid, std::span<const int> linear_ids,
                                  FeatureFamily family, const std::vector<HandSkeleton>& hands,
                                  const std::vector<HandProxy>& proxies, const TriMesh& mesh);

/// Rows for every surface voxel (prediction targets live there).
struct VoxelFeatureMatrix {
  FeatureFamily family = FeatureFamily::kSimpleJoints;
  Eigen::MatrixXd values;        // surface voxels x (feature_dim + 1)
  std::vector<int> linear_ids;
};
VoxelFeatureMatrix voxel_features(const VoxelGrid& grid, FeatureFamily family,
                                  const std::vector<HandSkeleton>& hands,
                                  const std::vector<HandProxy>& proxies, const TriMesh& mesh);

/// Ground-truth contact per surface voxel: the map value at the nearest
/// mesh vertex to the voxel center.
std::vector<double> voxel_targets(const VoxelGrid& grid, const TriMesh& mesh,
                                  const std::vector<double>& vertex_contact);

}  // namespace graspkit
