#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graspkit/mesh.hpp"

namespace graspkit {

/// Load a mesh from .obj or .ply (binary little-endian or ascii).
TriMesh load_mesh(const std::string& path);

/// Mesh plus optional per-vertex "contact" scalar from a PLY file.
struct MeshWithContact {
  TriMesh mesh;
  std::optional<std::vector<double>> contact;
};
MeshWithContact load_mesh_with_contact(const std::string& path);

/// Point cloud plus optional per-point "contact" scalar.
struct CloudWithContact {
  PointCloud cloud;
  std::optional<std::vector<double>> contact;
};
CloudWithContact load_cloud_ply(const std::string& path);

void save_mesh_obj(const std::string& path, const TriMesh& mesh);

/// Binary little-endian PLY, float32 positions; optional per-vertex
/// "contact" float property.
void save_mesh_ply(const std::string& path, const TriMesh& mesh,
                   const std::vector<double>* contact = nullptr);

/// Point cloud PLY with normals; optional per-point "contact" property.
void save_cloud_ply(const std::string& path, const PointCloud& cloud,
                    const std::vector<double>* contact = nullptr);

}  // namespace graspkit
