#pragma once

#include <cstdint>
#include <vector>

#include "graspkit/mesh.hpp"
#include "graspkit/types.hpp"

namespace graspkit {

/// 64^3 occupancy grid over a mesh. Cells are isotropic: the largest bounding
/// box extent divided by the resolution, other axes centered.
class VoxelGrid {
 public:
  static constexpr int kResolution = 64;

  VoxelGrid(const Vec3& origin, double cell_size);

  const Vec3& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  /// False when the source mesh was not watertight, so only the surface
  /// shell is occupied.
  bool interior_filled() const { return interior_filled_; }

  static int linear_index(int ix, int iy, int iz) {
    return (ix * kResolution + iy) * kResolution + iz;
  }
  static void unpack(int linear, int& ix, int& iy, int& iz) {
    iz = linear % kResolution;
    iy = (linear / kResolution) % kResolution;
    ix = linear / (kResolution * kResolution);
  }

  bool occupied(int linear) const { return state_[linear] != kEmpty; }
  bool surface(int linear) const { return state_[linear] == kSurface; }
  bool interior(int linear) const { return state_[linear] == kInterior; }

  Vec3 center(int ix, int iy, int iz) const {
    return origin_ + cell_size_ * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
  }
  Vec3 center(int linear) const {
    int ix, iy, iz;
    unpack(linear, ix, iy, iz);
    return center(ix, iy, iz);
  }

  /// Cell containing p, clamped to the grid.
  void locate(const Vec3& p, int& ix, int& iy, int& iz) const;

  const std::vector<int>& surface_voxels() const { return surface_voxels_; }
  int occupied_count() const { return occupied_count_; }

 private:
  friend VoxelGrid voxelize(const TriMesh&);

  static constexpr uint8_t kEmpty = 0;
  static constexpr uint8_t kSurface = 1;
  static constexpr uint8_t kInterior = 2;

  Vec3 origin_;
  double cell_size_;
  bool interior_filled_ = false;
  std::vector<uint8_t> state_;
  std::vector<int> surface_voxels_;
  int occupied_count_ = 0;
};

/// Rasterizes the mesh surface into the grid (triangle/box overlap), then
/// fills the enclosed volume when the mesh is watertight. Non-watertight
/// meshes produce a surface-only grid with interior_filled() == false.
VoxelGrid voxelize(const TriMesh& mesh);

}  // namespace graspkit
