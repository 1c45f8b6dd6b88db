#include "graspkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graspkit/bvh.hpp"
#include "graspkit/parallel.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

int feature_dim(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::kSimpleJoints: return 63;
    case FeatureFamily::kRelativeJoints: return 66;
    case FeatureFamily::kSkeleton: return 40;
    case FeatureFamily::kMesh: return 23;
  }
  throw Error("feature_dim: unknown family");
}

std::string family_name(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::kSimpleJoints: return "simple-joints";
    case FeatureFamily::kRelativeJoints: return "relative-joints";
    case FeatureFamily::kSkeleton: return "skeleton";
    case FeatureFamily::kMesh: return "mesh";
  }
  throw Error("family_name: unknown family");
}

FeatureFamily family_from_name(const std::string& name) {
  if (name == "simple-joints") return FeatureFamily::kSimpleJoints;
  if (name == "relative-joints") return FeatureFamily::kRelativeJoints;
  if (name == "skeleton") return FeatureFamily::kSkeleton;
  if (name == "mesh") return FeatureFamily::kMesh;
  throw Error("unknown feature family: " + name);
}

namespace {

void require_hands(const std::vector<HandSkeleton>& hands) {
  if (hands.empty()) throw Error("features: at least one hand required");
  for (const HandSkeleton& h : hands) h.validate();
}

int closest_hand(const Vec3& point, const std::vector<HandSkeleton>& hands) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int h = 0; h < static_cast<int>(hands.size()); ++h) {
    for (const Vec3& j : hands[h].joints) {
      const double d = (point - j).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = h;
      }
    }
  }
  return best;
}

void require_normals(const PointCloud& points) {
  if (points.normals.size() != points.points.size() || points.points.empty()) {
    throw Error("features: point cloud normals required");
  }
}

}  // namespace

FeatureMatrix simple_joints(const PointCloud& points, const std::vector<HandSkeleton>& hands) {
  require_hands(hands);
  FeatureMatrix fm;
  fm.family = FeatureFamily::kSimpleJoints;
  fm.values.resize(points.size(), 63);
  fm.hand_index.resize(points.size());
  parallel_for(0, points.size(), [&](int i) {
    const int h = closest_hand(points.points[i], hands);
    fm.hand_index[i] = h;
    for (int j = 0; j < 21; ++j) {
      fm.values.block<1, 3>(i, 3 * j) = hands[h].joints[j].transpose();
    }
  });
  return fm;
}

FeatureMatrix relative_joints(const PointCloud& points, const std::vector<HandSkeleton>& hands) {
  require_hands(hands);
  require_normals(points);
  FeatureMatrix fm;
  fm.family = FeatureFamily::kRelativeJoints;
  fm.values.resize(points.size(), 66);
  fm.hand_index.resize(points.size());
  parallel_for(0, points.size(), [&](int i) {
    const int h = closest_hand(points.points[i], hands);
    fm.hand_index[i] = h;
    for (int j = 0; j < 21; ++j) {
      fm.values.block<1, 3>(i, 3 * j) = (hands[h].joints[j] - points.points[i]).transpose();
    }
    fm.values.block<1, 3>(i, 63) = points.normals[i].transpose();
  });
  return fm;
}

FeatureMatrix skeleton_features(const PointCloud& points,
                                const std::vector<HandSkeleton>& hands) {
  require_hands(hands);
  require_normals(points);
  FeatureMatrix fm;
  fm.family = FeatureFamily::kSkeleton;
  fm.values.resize(points.size(), 40);
  fm.hand_index.resize(points.size());
  const auto& segments = HandSkeleton::phalanges();
  parallel_for(0, points.size(), [&](int i) {
    const Vec3& p = points.points[i];
    const int h = closest_hand(p, hands);
    fm.hand_index[i] = h;
    for (int s = 0; s < 20; ++s) {
      const SegmentHit hit = point_segment_distance(p, hands[h].joints[segments[s][0]],
                                                    hands[h].joints[segments[s][1]]);
      fm.values(i, s) = hit.distance;
      if (hit.distance < 1e-12) {
        fm.values(i, 20 + s) = 0.0;  // direction undefined on the segment
      } else {
        const Vec3 dir = (hit.closest - p) / hit.distance;
        fm.values(i, 20 + s) = dir.dot(points.normals[i]);
      }
    }
  });
  return fm;
}

FeatureMatrix mesh_features(const PointCloud& points, const std::vector<HandSkeleton>& hands,
                            const std::vector<HandProxy>& proxies) {
  require_hands(hands);
  require_normals(points);
  if (proxies.size() != hands.size()) {
    throw Error("mesh_features: one proxy per hand required");
  }
  FeatureMatrix fm;
  fm.family = FeatureFamily::kMesh;
  fm.values.resize(points.size(), 23);
  fm.hand_index.resize(points.size());
  fm.mesh_closest_part.resize(points.size());
  parallel_for(0, points.size(), [&](int i) {
    const Vec3& p = points.points[i];
    const int h = closest_hand(p, hands);
    fm.hand_index[i] = h;
    const ProxyHit hit = proxy_nearest(proxies[h], p);
    fm.mesh_closest_part[i] = hit.part;
    fm.values(i, 0) = std::max(hit.signed_distance, 0.0);  // interior clamps to contact
    const Vec3 to_surface = hit.surface_point - p;
    const double len = to_surface.norm();
    fm.values(i, 1) = len < 1e-12 ? 0.0 : to_surface.dot(points.normals[i]) / len;
    for (int j = 0; j < 21; ++j) {
      fm.values(i, 2 + j) = (hands[h].joints[j] - p).norm();
    }
  });
  return fm;
}

FeatureMatrix compute_features(FeatureFamily family, const PointCloud& points,
                               const std::vector<HandSkeleton>& hands,
                               const std::vector<HandProxy>& proxies) {
  switch (family) {
    case FeatureFamily::kSimpleJoints: return simple_joints(points, hands);
    case FeatureFamily::kRelativeJoints: return relative_joints(points, hands);
    case FeatureFamily::kSkeleton: return skeleton_features(points, hands);
    case FeatureFamily::kMesh: {
      if (!proxies.empty()) return mesh_features(points, hands, proxies);
      std::vector<HandProxy> built;
      built.reserve(hands.size());
      for (const HandSkeleton& h : hands) built.push_back(make_hand_proxy(h));
      return mesh_features(points, hands, built);
    }
  }
  throw Error("compute_features: unknown family");
}

FeatureMatrix occlusion_dropout(const FeatureMatrix& features,
                                const std::vector<HandSkeleton>& hands, uint64_t seed) {
  require_hands(hands);
  if (features.dropout.applied) throw Error("occlusion_dropout: already applied");

  // Grasp extent: hand joints around their centroid.
  Vec3 centroid = Vec3::Zero();
  int count = 0;
  for (const HandSkeleton& hand : hands) {
    for (const Vec3& j : hand.joints) {
      centroid += j;
      ++count;
    }
  }
  centroid /= count;
  double radius = 0;
  for (const HandSkeleton& hand : hands) {
    for (const Vec3& j : hand.joints) radius = std::max(radius, (j - centroid).norm());
  }
  radius = std::max(radius, 1e-3);

  Rng rng(seed);
  const Vec3 camera = centroid + 3.0 * radius * rng.unit_vector();

  FeatureMatrix out = features;
  out.dropout.applied = true;
  out.dropout.camera_position = camera;
  out.dropout.dropped_joints.resize(hands.size());

  std::vector<std::array<bool, 21>> dropped(hands.size());
  for (size_t h = 0; h < hands.size(); ++h) {
    std::array<int, 21> order;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (hands[h].joints[a] - camera).squaredNorm() >
             (hands[h].joints[b] - camera).squaredNorm();
    });
    dropped[h].fill(false);
    for (int k = 0; k < kDropoutJointsPerHand; ++k) {
      dropped[h][order[k]] = true;
      out.dropout.dropped_joints[h].push_back(order[k]);
    }
    std::sort(out.dropout.dropped_joints[h].begin(), out.dropout.dropped_joints[h].end());
  }

  const auto& segments = HandSkeleton::phalanges();
  for (int i = 0; i < out.values.rows(); ++i) {
    const auto& drop = dropped[out.hand_index.empty() ? 0 : out.hand_index[i]];
    switch (out.family) {
      case FeatureFamily::kSimpleJoints:
      case FeatureFamily::kRelativeJoints:
        for (int j = 0; j < 21; ++j) {
          if (drop[j]) out.values.block<1, 3>(i, 3 * j).setZero();
        }
        break;
      case FeatureFamily::kSkeleton:
        for (int s = 0; s < 20; ++s) {
          if (drop[segments[s][0]] || drop[segments[s][1]]) {
            out.values(i, s) = 0;
            out.values(i, 20 + s) = 0;
          }
        }
        break;
      case FeatureFamily::kMesh: {
        for (int j = 0; j < 21; ++j) {
          if (drop[j]) out.values(i, 2 + j) = 0;
        }
        // The nearest-surface entries survive as long as their source
        // primitive still has a visible joint.
        const int part = out.mesh_closest_part.empty() ? -1 : out.mesh_closest_part[i];
        bool zero_surface = false;
        if (part >= 0 && part < 20) {
          zero_surface = drop[segments[part][0]] && drop[segments[part][1]];
        } else if (part == HandProxy::kPalmPart) {
          zero_surface = true;
          for (int id : HandSkeleton::palm_joints()) {
            if (!drop[id]) {
              zero_surface = false;
              break;
            }
          }
        }
        if (zero_surface) {
          out.values(i, 0) = 0;
          out.values(i, 1) = 0;
        }
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd voxel_features_at(const VoxelGrid& grid, std::span<const int> linear_ids,
                                  FeatureFamily family, const std::vector<HandSkeleton>& hands,
                                  const std::vector<HandProxy>& proxies, const TriMesh& mesh) {
  require_hands(hands);
  const MeshBvh bvh(mesh);
  const int dim = feature_dim(family);

  // Evaluate through the point path at voxel centers, normals borrowed from
  // the nearest surface point.
  std::vector<Vec3> centers(linear_ids.size());
  std::vector<Vec3> normals(linear_ids.size());
  for (size_t i = 0; i < linear_ids.size(); ++i) {
    centers[i] = grid.center(linear_ids[i]);
    const MeshHit hit = bvh.nearest(centers[i]);
    normals[i] = hit.face >= 0 ? mesh.face_normal(hit.face) : Vec3::UnitZ();
  }
  const PointCloud cloud(std::move(centers), std::move(normals));
  const FeatureMatrix fm = compute_features(family, cloud, hands, proxies);

  Eigen::MatrixXd out(linear_ids.size(), dim + 1);
  for (size_t i = 0; i < linear_ids.size(); ++i) {
    const int id = linear_ids[i];
    if (grid.interior(id)) {
      out.row(i).setZero();
      out(i, dim) = 1.0;
    } else {
      out.row(i).head(dim) = fm.values.row(i);
      out(i, dim) = grid.occupied(id) ? 1.0 : 0.0;
    }
  }
  return out;
}

VoxelFeatureMatrix voxel_features(const VoxelGrid& grid, FeatureFamily family,
                                  const std::vector<HandSkeleton>& hands,
                                  const std::vector<HandProxy>& proxies, const TriMesh& mesh) {
  VoxelFeatureMatrix out;
  out.family = family;
  out.linear_ids = grid.surface_voxels();
  out.values = voxel_features_at(grid, out.linear_ids, family, hands, proxies, mesh);
  return out;
}

std::vector<double> voxel_targets(const VoxelGrid& grid, const TriMesh& mesh,
                                  const std::vector<double>& vertex_contact) {
  if (vertex_contact.size() != mesh.vertices().size()) {
    throw Error("voxel_targets: contact length mismatch");
  }
  const MeshBvh bvh(mesh);
  const auto& ids = grid.surface_voxels();
  std::vector<double> targets(ids.size(), 0.0);
  parallel_for(0, static_cast<int>(ids.size()), [&](int i) {
    const Vec3 center = grid.center(ids[i]);
    const MeshHit hit = bvh.nearest(center);
    if (hit.face < 0) return;
    // nearest vertex of the hit face
    const Face& f = mesh.faces()[hit.face];
    int best = f[0];
    double best_d = (mesh.vertices()[f[0]] - center).squaredNorm();
    for (int k = 1; k < 3; ++k) {
      const double d = (mesh.vertices()[f[k]] - center).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = f[k];
      }
    }
    targets[i] = vertex_contact[best];
  });
  return targets;
}

}  // namespace graspkit
