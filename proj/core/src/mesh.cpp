#include "graspkit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "graspkit/rng.hpp"

namespace graspkit {

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)),
      lazy_(std::make_shared<LazyState>()) {
  if (vertices_.empty() || faces_.empty()) throw Error("TriMesh: empty mesh");
  const int n = static_cast<int>(vertices_.size());
  for (const Face& f : faces_) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) throw Error("TriMesh: face index out of range");
    }
  }
  for (const Vec3& v : vertices_) {
    if (!v.allFinite()) throw Error("TriMesh: non-finite vertex");
  }
}

const std::vector<Vec3>& TriMesh::vertex_normals() const {
  std::call_once(lazy_->normals_once, [this] { lazy_->normals = compute_vertex_normals(*this); });
  return lazy_->normals.normals;
}

const std::vector<int>& TriMesh::degenerate_vertices() const {
  vertex_normals();
  return lazy_->normals.degenerate_vertices;
}

Vec3 TriMesh::face_normal(int face) const {
  const Face& f = faces_[face];
  const Vec3 n = (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]);
  const double len = n.norm();
  if (len < 1e-18) return Vec3::UnitZ();
  return n / len;
}

double TriMesh::face_area(int face) const {
  const Face& f = faces_[face];
  return 0.5 *
         (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]).norm();
}

double TriMesh::surface_area() const {
  double area = 0;
  for (int f = 0; f < static_cast<int>(faces_.size()); ++f) area += face_area(f);
  return area;
}

Eigen::AlignedBox3d TriMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const Vec3& v : vertices_) box.extend(v);
  return box;
}

bool TriMesh::is_watertight() const {
  std::call_once(lazy_->watertight_once, [this] {
    // Count directed edges: closed orientable manifold iff every directed
    // edge appears once and its reverse appears once.
    std::map<std::pair<int, int>, int> edges;
    for (const Face& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        const int a = f[k];
        const int b = f[(k + 1) % 3];
        if (a == b) {
          lazy_->watertight = false;
          return;
        }
        if (++edges[{a, b}] > 1) {
          lazy_->watertight = false;
          return;
        }
      }
    }
    for (const auto& [edge, count] : edges) {
      auto rev = edges.find({edge.second, edge.first});
      if (rev == edges.end() || rev->second != 1) {
        lazy_->watertight = false;
        return;
      }
    }
    lazy_->watertight = true;
  });
  return lazy_->watertight;
}

VertexNormals compute_vertex_normals(const TriMesh& mesh) {
  VertexNormals out;
  out.normals.assign(mesh.vertices().size(), Vec3::Zero());
  // Cross-product magnitude already carries the face area weight.
  for (const Face& f : mesh.faces()) {
    const Vec3& a = mesh.vertices()[f[0]];
    const Vec3 weighted =
        (mesh.vertices()[f[1]] - a).cross(mesh.vertices()[f[2]] - a);
    for (int idx : f) out.normals[idx] += weighted;
  }
  for (int i = 0; i < static_cast<int>(out.normals.size()); ++i) {
    const double len = out.normals[i].norm();
    if (len < 1e-14) {
      out.degenerate_vertices.push_back(i);
      out.normals[i] = Vec3::UnitZ();
    } else {
      out.normals[i] /= len;
    }
  }
  return out;
}

PointCloud::PointCloud(std::vector<Vec3> points_, std::vector<Vec3> normals_,
                       std::vector<int> source_faces_)
    : points(std::move(points_)), normals(std::move(normals_)),
      source_faces(std::move(source_faces_)) {
  if (points.size() != normals.size()) {
    throw Error("PointCloud: points and normals length mismatch");
  }
  for (const Vec3& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("PointCloud: normal not unit length");
  }
  if (!source_faces.empty() && source_faces.size() != points.size()) {
    throw Error("PointCloud: provenance length mismatch");
  }
}

PointCloud sample_surface(const TriMesh& mesh, int count, uint64_t seed) {
  if (count < 1) throw Error("sample_surface: count must be >= 1");
  const int nf = static_cast<int>(mesh.faces().size());
  std::vector<double> cumulative(nf);
  double total = 0;
  for (int f = 0; f < nf; ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (total <= 0) throw Error("sample_surface: mesh has zero area");

  Rng rng(seed);
  std::vector<Vec3> points(count), normals(count);
  std::vector<int> faces(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    const int f = static_cast<int>(
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const int face = std::min(f, nf - 1);
    const Face& tri = mesh.faces()[face];
    // sqrt trick gives uniform barycentric coordinates
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    points[i] = wa * mesh.vertices()[tri[0]] + wb * mesh.vertices()[tri[1]] +
                wc * mesh.vertices()[tri[2]];
    normals[i] = mesh.face_normal(face);
    faces[i] = face;
  }
  return PointCloud(std::move(points), std::move(normals), std::move(faces));
}

SegmentHit point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  SegmentHit hit;
  if (len2 < 1e-24) {
    hit.closest = a;
  } else {
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    hit.closest = a + t * ab;
  }
  hit.distance = (p - hit.closest).norm();
  return hit;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;

  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + v * ab + w * ac;
}

namespace {

int midpoint_index(std::map<std::pair<int, int>, int>& cache, std::vector<Vec3>& vertices,
                   int a, int b, double radius) {
  const auto key = std::minmax(a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const Vec3 mid = ((vertices[a] + vertices[b]) * 0.5).normalized() * radius;
  vertices.push_back(mid);
  const int idx = static_cast<int>(vertices.size()) - 1;
  cache.emplace(key, idx);
  return idx;
}

}  // namespace

TriMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> vertices = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : vertices) v = v.normalized() * radius;
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> cache;
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = midpoint_index(cache, vertices, f[0], f[1], radius);
      const int bc = midpoint_index(cache, vertices, f[1], f[2], radius);
      const int ca = midpoint_index(cache, vertices, f[2], f[0], radius);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh make_box(const Vec3& extents, int cells_per_axis) {
  const int n = std::max(1, cells_per_axis);
  const Vec3 h = extents / 2.0;
  std::vector<Vec3> vertices;
  std::map<std::array<int, 3>, int> weld;  // lattice coordinate -> vertex id
  std::vector<Face> faces;

  // u x v = outward normal for each face so winding stays consistent.
  struct FaceAxes {
    int fixed;   // axis held at the face plane
    int sign;    // +1 or -1
    int u, v;
  };
  const FaceAxes face_axes[6] = {{0, 1, 1, 2}, {0, -1, 2, 1}, {1, 1, 2, 0},
                                 {1, -1, 0, 2}, {2, 1, 0, 1}, {2, -1, 1, 0}};

  auto vertex_at = [&](std::array<int, 3> lattice) {
    auto it = weld.find(lattice);
    if (it != weld.end()) return it->second;
    const Vec3 p(-h.x() + extents.x() * lattice[0] / n,
                 -h.y() + extents.y() * lattice[1] / n,
                 -h.z() + extents.z() * lattice[2] / n);
    vertices.push_back(p);
    const int id = static_cast<int>(vertices.size()) - 1;
    weld.emplace(lattice, id);
    return id;
  };

  for (const FaceAxes& fa : face_axes) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        auto corner = [&](int di, int dj) {
          std::array<int, 3> lattice{};
          lattice[fa.fixed] = fa.sign > 0 ? n : 0;
          lattice[fa.u] = i + di;
          lattice[fa.v] = j + dj;
          return vertex_at(lattice);
        };
        const int a = corner(0, 0), b = corner(1, 0), c = corner(1, 1), d = corner(0, 1);
        faces.push_back({a, b, c});
        faces.push_back({a, c, d});
      }
    }
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh make_cylinder(double radius, double height, int segments, int rings) {
  if (rings <= 0) {
    // roughly square side quads
    rings = std::max(1, static_cast<int>(std::round(height * segments / (2.0 * M_PI * radius))));
  }
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  const double hz = height / 2.0;
  for (int r = 0; r <= rings; ++r) {
    const double z = -hz + height * r / rings;
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * M_PI * i / segments;
      vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
  }
  auto ring_vertex = [&](int r, int i) { return r * segments + (i % segments); };
  for (int r = 0; r < rings; ++r) {
    for (int i = 0; i < segments; ++i) {
      const int b0 = ring_vertex(r, i), b1 = ring_vertex(r, i + 1);
      const int t0 = ring_vertex(r + 1, i), t1 = ring_vertex(r + 1, i + 1);
      faces.push_back({b0, b1, t1});
      faces.push_back({b0, t1, t0});
    }
  }
  const int bottom_center = static_cast<int>(vertices.size());
  vertices.emplace_back(0, 0, -hz);
  const int top_center = bottom_center + 1;
  vertices.emplace_back(0, 0, hz);
  for (int i = 0; i < segments; ++i) {
    faces.push_back({bottom_center, ring_vertex(0, i + 1), ring_vertex(0, i)});
    faces.push_back({top_center, ring_vertex(rings, i), ring_vertex(rings, i + 1)});
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

TriMesh make_torus(double major_radius, double minor_radius, int major_segments,
                   int minor_segments) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  for (int i = 0; i < major_segments; ++i) {
    const double u = 2.0 * M_PI * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * M_PI * j / minor_segments;
      const double r = major_radius + minor_radius * std::cos(v);
      vertices.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v));
    }
  }
  auto idx = [&](int i, int j) {
    return (i % major_segments) * minor_segments + (j % minor_segments);
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      const int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

}  // namespace graspkit
