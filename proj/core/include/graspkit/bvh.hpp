#pragma once

#include <memory>
#include <vector>

#include <Eigen/Geometry>

#include "graspkit/mesh.hpp"
#include "graspkit/types.hpp"

namespace graspkit {

struct MeshHit {
  Vec3 point = Vec3::Zero();
  double distance = 0;
  int face = -1;
};

/// Bounding-volume hierarchy over mesh triangles for exact closest-point
/// queries and inside/outside testing. Read-only after construction.
class MeshBvh {
 public:
  explicit MeshBvh(const TriMesh& mesh);

  /// Exact closest point on the triangle set.
  MeshHit nearest(const Vec3& query) const;

  /// Ray-parity containment test. Meaningful for watertight meshes; rays
  /// hitting edges or vertices are retried along a different direction.
  bool contains(const Vec3& query) const;

  const TriMesh& mesh() const { return *mesh_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1;  // children, or leaf range when left == -1
    int begin = 0, end = 0;
  };

  int build(int begin, int end, std::vector<Vec3>& centroids);
  void nearest_recurse(int node, const Vec3& query, MeshHit& best) const;
  int count_crossings(const Vec3& origin, const Vec3& dir, bool& degenerate) const;

  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;  // triangle indices, leaf-contiguous
};

/// One-off convenience wrapper; builds a throwaway index.
MeshHit nearest_on_mesh(const TriMesh& mesh, const Vec3& query);

}  // namespace graspkit
