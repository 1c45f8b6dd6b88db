#include "graspkit/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace graspkit {

namespace {

// Akenine-Moller separating-axis triangle/box overlap. Box centered at the
// origin with half extents h; triangle vertices relative to the box center.
bool axis_test(const Vec3& axis, const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& h) {
  const double p0 = axis.dot(v0);
  const double p1 = axis.dot(v1);
  const double p2 = axis.dot(v2);
  const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) +
                   h.z() * std::abs(axis.z());
  const double mn = std::min({p0, p1, p2});
  const double mx = std::max({p0, p1, p2});
  return !(mn > r || mx < -r);
}

bool triangle_box_overlap(const Vec3& center, const Vec3& half, const Vec3& a, const Vec3& b,
                          const Vec3& c) {
  const Vec3 v0 = a - center;
  const Vec3 v1 = b - center;
  const Vec3 v2 = c - center;

  for (int k = 0; k < 3; ++k) {
    const double mn = std::min({v0[k], v1[k], v2[k]});
    const double mx = std::max({v0[k], v1[k], v2[k]});
    if (mn > half[k] || mx < -half[k]) return false;
  }

  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;
  const Vec3 axes[] = {Vec3::UnitX().cross(e0), Vec3::UnitX().cross(e1), Vec3::UnitX().cross(e2),
                       Vec3::UnitY().cross(e0), Vec3::UnitY().cross(e1), Vec3::UnitY().cross(e2),
                       Vec3::UnitZ().cross(e0), Vec3::UnitZ().cross(e1), Vec3::UnitZ().cross(e2)};
  for (const Vec3& axis : axes) {
    if (axis.squaredNorm() < 1e-24) continue;
    if (!axis_test(axis, v0, v1, v2, half)) return false;
  }

  const Vec3 n = e0.cross(e1);
  if (n.squaredNorm() > 1e-24 && !axis_test(n, v0, v1, v2, half)) return false;
  return true;
}

}  // namespace

VoxelGrid::VoxelGrid(const Vec3& origin, double cell_size)
    : origin_(origin), cell_size_(cell_size),
      state_(kResolution * kResolution * kResolution, kEmpty) {
  if (cell_size <= 0) throw Error("VoxelGrid: cell size must be positive");
}

void VoxelGrid::locate(const Vec3& p, int& ix, int& iy, int& iz) const {
  const Vec3 rel = (p - origin_) / cell_size_;
  ix = std::clamp(static_cast<int>(std::floor(rel.x())), 0, kResolution - 1);
  iy = std::clamp(static_cast<int>(std::floor(rel.y())), 0, kResolution - 1);
  iz = std::clamp(static_cast<int>(std::floor(rel.z())), 0, kResolution - 1);
}

VoxelGrid voxelize(const TriMesh& mesh) {
  constexpr int res = VoxelGrid::kResolution;
  const Eigen::AlignedBox3d box = mesh.bounds();
  const Vec3 extent = box.sizes();
  const double cell = extent.maxCoeff() / res;
  if (cell <= 0) throw Error("voxelize: degenerate mesh bounds");
  // Isotropic cells; smaller axes centered inside the cube of space.
  const Vec3 span = Vec3::Constant(cell * res);
  const Vec3 origin = box.center() - span / 2.0;

  VoxelGrid grid(origin, cell);

  const Vec3 half = Vec3::Constant(cell / 2.0);
  for (const Face& tri : mesh.faces()) {
    const Vec3& a = mesh.vertices()[tri[0]];
    const Vec3& b = mesh.vertices()[tri[1]];
    const Vec3& c = mesh.vertices()[tri[2]];
    Eigen::AlignedBox3d tb;
    tb.extend(a);
    tb.extend(b);
    tb.extend(c);
    int lo[3], hi[3];
    grid.locate(tb.min(), lo[0], lo[1], lo[2]);
    grid.locate(tb.max(), hi[0], hi[1], hi[2]);
    for (int ix = lo[0]; ix <= hi[0]; ++ix) {
      for (int iy = lo[1]; iy <= hi[1]; ++iy) {
        for (int iz = lo[2]; iz <= hi[2]; ++iz) {
          const int idx = VoxelGrid::linear_index(ix, iy, iz);
          if (grid.state_[idx] == VoxelGrid::kSurface) continue;
          if (triangle_box_overlap(grid.center(ix, iy, iz), half, a, b, c)) {
            grid.state_[idx] = VoxelGrid::kSurface;
          }
        }
      }
    }
  }

  for (int i = 0; i < res * res * res; ++i) {
    if (grid.state_[i] == VoxelGrid::kSurface) grid.surface_voxels_.push_back(i);
  }

  if (mesh.is_watertight()) {
    // Flood the exterior from the grid boundary through empty cells; the
    // rasterized shell is gap-free for 6-connected paths, so anything left
    // unreached is interior.
    std::vector<uint8_t> exterior(grid.state_.size(), 0);
    std::deque<int> queue;
    auto seed = [&](int ix, int iy, int iz) {
      const int idx = VoxelGrid::linear_index(ix, iy, iz);
      if (!exterior[idx] && grid.state_[idx] == VoxelGrid::kEmpty) {
        exterior[idx] = 1;
        queue.push_back(idx);
      }
    };
    for (int u = 0; u < res; ++u) {
      for (int v = 0; v < res; ++v) {
        seed(0, u, v);
        seed(res - 1, u, v);
        seed(u, 0, v);
        seed(u, res - 1, v);
        seed(u, v, 0);
        seed(u, v, res - 1);
      }
    }
    const int strides[3] = {res * res, res, 1};
    while (!queue.empty()) {
      const int idx = queue.front();
      queue.pop_front();
      int ix, iy, iz;
      VoxelGrid::unpack(idx, ix, iy, iz);
      const int coords[3] = {ix, iy, iz};
      for (int axis = 0; axis < 3; ++axis) {
        for (int step = -1; step <= 1; step += 2) {
          const int c = coords[axis] + step;
          if (c < 0 || c >= res) continue;
          const int nidx = idx + step * strides[axis];
          if (!exterior[nidx] && grid.state_[nidx] == VoxelGrid::kEmpty) {
            exterior[nidx] = 1;
            queue.push_back(nidx);
          }
        }
      }
    }
    for (size_t i = 0; i < grid.state_.size(); ++i) {
      if (grid.state_[i] == VoxelGrid::kEmpty && !exterior[i]) {
        grid.state_[i] = VoxelGrid::kInterior;
      }
    }
    grid.interior_filled_ = true;
  }

  grid.occupied_count_ = 0;
  for (uint8_t s : grid.state_) {
    if (s != VoxelGrid::kEmpty) ++grid.occupied_count_;
  }
  return grid;
}

}  // namespace graspkit
