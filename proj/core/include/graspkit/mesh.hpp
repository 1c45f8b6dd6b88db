#pragma once

#include <array>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Geometry>

#include "graspkit/types.hpp"

namespace graspkit {

using Face = std::array<int, 3>;

struct VertexNormals {
  std::vector<Vec3> normals;
  std::vector<int> degenerate_vertices;  // zero-area star; normal set to +z
};

/// Immutable triangle mesh. Positions in meters. Vertex normals are
/// area-weighted averages of incident face normals, computed on first use.
class TriMesh {
 public:
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }

  const std::vector<Vec3>& vertex_normals() const;
  const std::vector<int>& degenerate_vertices() const;

  Vec3 face_normal(int face) const;
  double face_area(int face) const;
  double surface_area() const;
  Eigen::AlignedBox3d bounds() const;

  /// Closed 2-manifold test: every edge shared by exactly two faces with
  /// opposite orientation.
  bool is_watertight() const;

 private:
  struct LazyState {
    std::once_flag normals_once;
    VertexNormals normals;
    std::once_flag watertight_once;
    bool watertight = false;
  };

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::shared_ptr<LazyState> lazy_;
};

VertexNormals compute_vertex_normals(const TriMesh& mesh);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> source_faces;  // provenance; empty when unknown

  PointCloud() = default;
  PointCloud(std::vector<Vec3> points, std::vector<Vec3> normals,
             std::vector<int> source_faces = {});

  int size() const { return static_cast<int>(points.size()); }
};

/// Area-weighted uniform surface sampling, deterministic for a fixed seed.
/// Normals are inherited from the sampled face.
PointCloud sample_surface(const TriMesh& mesh, int count, uint64_t seed);

struct SegmentHit {
  double distance = 0;
  Vec3 closest = Vec3::Zero();
};

/// Distance from p to the closed segment [a, b]; a == b degenerates to a point.
SegmentHit point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Closest point on triangle (ericson-style exact region test).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Parametric closed meshes used by the synthetic generator and tests.
TriMesh make_icosphere(double radius, int subdivisions = 3);
TriMesh make_box(const Vec3& extents, int cells_per_axis = 1);
TriMesh make_cylinder(double radius, double height, int segments = 48, int rings = 0);
TriMesh make_torus(double major_radius, double minor_radius, int major_segments = 48,
                   int minor_segments = 24);

}  // namespace graspkit
