#include "graspkit/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace graspkit {

namespace {

double box_squared_distance(const Eigen::AlignedBox3d& box, const Vec3& p) {
  double d2 = 0;
  for (int k = 0; k < 3; ++k) {
    const double lo = box.min()[k], hi = box.max()[k];
    if (p[k] < lo) d2 += (lo - p[k]) * (lo - p[k]);
    else if (p[k] > hi) d2 += (p[k] - hi) * (p[k] - hi);
  }
  return d2;
}

bool ray_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir) {
  double tmin = 0, tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double t0 = (box.min()[k] - origin[k]) * inv_dir[k];
    double t1 = (box.max()[k] - origin[k]) * inv_dir[k];
    if (inv_dir[k] < 0) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmax < tmin) return false;
  }
  return true;
}

// Moller-Trumbore with degeneracy reporting for parity robustness.
enum class RayHit { kMiss, kHit, kDegenerate };

RayHit ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                    const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 pvec = dir.cross(ac);
  const double det = ab.dot(pvec);
  const double scale = std::max({ab.norm() * ac.norm(), 1e-30});
  if (std::abs(det) < 1e-12 * scale) return RayHit::kDegenerate;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  const Vec3 qvec = tvec.cross(ab);
  const double v = dir.dot(qvec) * inv_det;
  const double t = ac.dot(qvec) * inv_det;
  const double eps = 1e-10;
  if (u < -eps || v < -eps || u + v > 1 + eps || t < -eps) return RayHit::kMiss;
  if (u < eps || v < eps || u + v > 1 - eps || std::abs(t) < eps) return RayHit::kDegenerate;
  return RayHit::kHit;
}

}  // namespace

MeshBvh::MeshBvh(const TriMesh& mesh) : mesh_(std::make_shared<TriMesh>(mesh)) {
  const int nf = static_cast<int>(mesh_->faces().size());
  order_.resize(nf);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centroids(nf);
  for (int f = 0; f < nf; ++f) {
    const Face& tri = mesh_->faces()[f];
    centroids[f] =
        (mesh_->vertices()[tri[0]] + mesh_->vertices()[tri[1]] + mesh_->vertices()[tri[2]]) / 3.0;
  }
  nodes_.reserve(2 * nf);
  build(0, nf, centroids);
}

int MeshBvh::build(int begin, int end, std::vector<Vec3>& centroids) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (int i = begin; i < end; ++i) {
    const Face& tri = mesh_->faces()[order_[i]];
    for (int idx : tri) node.box.extend(mesh_->vertices()[idx]);
  }
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 4) return index;

  const Vec3 extent = node.box.sizes();
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  const int left = build(begin, mid, centroids);
  const int right = build(mid, end, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void MeshBvh::nearest_recurse(int node_idx, const Vec3& query, MeshHit& best) const {
  const Node& node = nodes_[node_idx];
  if (box_squared_distance(node.box, query) >= best.distance * best.distance) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int f = order_[i];
      const Face& tri = mesh_->faces()[f];
      const Vec3 cp = closest_point_on_triangle(query, mesh_->vertices()[tri[0]],
                                                mesh_->vertices()[tri[1]],
                                                mesh_->vertices()[tri[2]]);
      const double d = (query - cp).norm();
      if (d < best.distance) {
        best.distance = d;
        best.point = cp;
        best.face = f;
      }
    }
    return;
  }
  const double dl = box_squared_distance(nodes_[node.left].box, query);
  const double dr = box_squared_distance(nodes_[node.right].box, query);
  if (dl < dr) {
    nearest_recurse(node.left, query, best);
    nearest_recurse(node.right, query, best);
  } else {
    nearest_recurse(node.right, query, best);
    nearest_recurse(node.left, query, best);
  }
}

MeshHit MeshBvh::nearest(const Vec3& query) const {
  MeshHit best;
  best.distance = std::numeric_limits<double>::infinity();
  nearest_recurse(0, query, best);
  return best;
}

int MeshBvh::count_crossings(const Vec3& origin, const Vec3& dir, bool& degenerate) const {
  degenerate = false;
  const Vec3 inv_dir(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
  int crossings = 0;
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_box(node.box, origin, inv_dir)) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const Face& tri = mesh_->faces()[order_[i]];
        const RayHit hit = ray_triangle(origin, dir, mesh_->vertices()[tri[0]],
                                        mesh_->vertices()[tri[1]], mesh_->vertices()[tri[2]]);
        if (hit == RayHit::kDegenerate) {
          degenerate = true;
          return 0;
        }
        if (hit == RayHit::kHit) ++crossings;
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return crossings;
}

bool MeshBvh::contains(const Vec3& query) const {
  // A fixed palette of irrational-ish directions; retry when a ray grazes
  // an edge or vertex.
  static const Vec3 kDirections[] = {
      Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259).normalized(),
      Vec3(0.8512, -0.3120, 0.4221).normalized(),
      Vec3(-0.2407, 0.9011, 0.3605).normalized(),
      Vec3(0.1361, 0.2877, -0.9480).normalized(),
      Vec3(-0.7071, -0.3482, 0.6154).normalized(),
      Vec3(0.9229, 0.1741, 0.3436).normalized(),
      Vec3(-0.4815, 0.7522, -0.4498).normalized(),
      Vec3(0.3311, -0.8852, -0.3266).normalized()};
  for (const Vec3& dir : kDirections) {
    bool degenerate = false;
    const int crossings = count_crossings(query, dir, degenerate);
    if (!degenerate) return (crossings % 2) == 1;
  }
  // Every probe grazed geometry; fall back to the nearest-face side test.
  const MeshHit hit = nearest(query);
  if (hit.face < 0) return false;
  return mesh_->face_normal(hit.face).dot(query - hit.point) < 0;
}

MeshHit nearest_on_mesh(const TriMesh& mesh, const Vec3& query) {
  return MeshBvh(mesh).nearest(query);
}

}  // namespace graspkit
