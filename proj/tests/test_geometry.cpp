#include <doctest.h>

#include <cmath>
#include <set>

#include "graspkit/bvh.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/rng.hpp"
#include "graspkit/types.hpp"
#include "graspkit/voxel.hpp"

using namespace graspkit;

namespace {

TriMesh flat_square(double size = 1.0) {
  // two triangles in z = 0, normal +z
  std::vector<Vec3> v = {{0, 0, 0}, {size, 0, 0}, {size, size, 0}, {0, size, 0}};
  std::vector<Face> f = {{0, 1, 2}, {0, 2, 3}};
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("rigid transform construction validates rotations") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(RigidTransform(bad, Vec3::Zero()), Error);
  Mat3 mirror = Mat3::Identity();
  mirror(2, 2) = -1;  // det -1
  CHECK_THROWS_AS(RigidTransform(mirror, Vec3::Zero()), Error);

  const RigidTransform t = RigidTransform::from_axis_angle(Vec3(0.3, -0.2, 0.9), Vec3(1, 2, 3));
  const RigidTransform id = t * t.inverse();
  CHECK((id.rotation() - Mat3::Identity()).norm() < 1e-12);
  CHECK(id.translation().norm() < 1e-12);
}

TEST_CASE("vertex normals: symmetric cube corner") {
  const TriMesh cube = make_box(Vec3(1, 1, 1));
  const auto result = compute_vertex_normals(cube);
  CHECK(result.degenerate_vertices.empty());
  // both main-diagonal corners have a symmetric star
  int checked = 0;
  for (size_t i = 0; i < cube.vertices().size(); ++i) {
    const Vec3& v = cube.vertices()[i];
    if ((v - Vec3(-0.5, -0.5, -0.5)).norm() < 1e-12) {
      CHECK((result.normals[i] - Vec3(-1, -1, -1).normalized()).norm() < 1e-12);
      ++checked;
    }
    if ((v - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12) {
      CHECK((result.normals[i] - Vec3(1, 1, 1).normalized()).norm() < 1e-12);
      ++checked;
    }
  }
  CHECK(checked == 2);
}

TEST_CASE("vertex normals: flat square and icosphere") {
  const TriMesh square = flat_square();
  for (const Vec3& n : square.vertex_normals()) {
    CHECK((n - Vec3(0, 0, 1)).norm() < 1e-12);
  }

  const TriMesh sphere = make_icosphere(1.0, 4);
  const auto& normals = sphere.vertex_normals();
  for (size_t i = 0; i < sphere.vertices().size(); ++i) {
    CHECK((normals[i] - sphere.vertices()[i].normalized()).norm() < 1e-2);
  }
}

TEST_CASE("vertex normals: degenerate star is flagged") {
  // an isolated sliver of zero area
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  std::vector<Face> f = {{0, 1, 2}, {0, 3, 4}};  // first face has zero area
  const TriMesh mesh(std::move(v), std::move(f));
  const auto result = compute_vertex_normals(mesh);
  // vertices 1 and 2 appear only in the degenerate face
  std::set<int> flagged(result.degenerate_vertices.begin(), result.degenerate_vertices.end());
  CHECK(flagged.count(1) == 1);
  CHECK(flagged.count(2) == 1);
  for (int i : result.degenerate_vertices) {
    CHECK(std::abs(result.normals[i].norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("surface sampling: centroid, containment, determinism") {
  const TriMesh square = flat_square();
  const PointCloud cloud = sample_surface(square, 100000, 42);
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : cloud.points) centroid += p;
  centroid /= cloud.size();
  CHECK((centroid - Vec3(0.5, 0.5, 0)).norm() < 1e-2);

  // single triangle, one sample, any seed: inside the triangle
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const TriMesh tri(std::move(v), {{0, 1, 2}});
  for (uint64_t seed : {0ull, 7ull, 123456789ull}) {
    const PointCloud one = sample_surface(tri, 1, seed);
    const Vec3& p = one.points[0];
    CHECK(p.x() >= -1e-12);
    CHECK(p.y() >= -1e-12);
    CHECK(p.x() + p.y() <= 1.0 + 1e-12);
    CHECK(std::abs(p.z()) < 1e-12);
  }

  // bit-identical for a fixed seed
  const PointCloud a = sample_surface(square, 1000, 9);
  const PointCloud b = sample_surface(square, 1000, 9);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.points[i] == b.points[i]);
    CHECK(a.normals[i] == b.normals[i]);
  }

  CHECK_THROWS_AS(sample_surface(square, 0, 1), Error);
}

TEST_CASE("surface sampling: area-uniformity over sphere octants") {
  const TriMesh sphere = make_icosphere(1.0, 4);
  const int n = 100000;
  const PointCloud cloud = sample_surface(sphere, n, 1234);
  std::array<int, 8> counts{};
  for (const Vec3& p : cloud.points) {
    const int octant = (p.x() > 0 ? 1 : 0) | (p.y() > 0 ? 2 : 0) | (p.z() > 0 ? 4 : 0);
    ++counts[octant];
  }
  const double expected = n / 8.0;
  const double sigma = std::sqrt(n * 0.125 * 0.875);
  for (int count : counts) {
    CHECK(std::abs(count - expected) < 3.0 * sigma);
  }
}

TEST_CASE("nearest point queries") {
  const TriMesh sphere = make_icosphere(1.0, 3);
  const MeshBvh bvh(sphere);

  SUBCASE("center of the unit sphere") {
    const MeshHit hit = bvh.nearest(Vec3::Zero());
    CHECK(hit.distance == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("query at a mesh vertex") {
    const MeshHit hit = bvh.nearest(sphere.vertices()[17]);
    CHECK(hit.distance < 1e-12);
  }
  SUBCASE("height above a flat square") {
    const TriMesh square = flat_square();
    const MeshBvh flat(square);
    for (double h : {0.1, 0.5, 2.0}) {
      const MeshHit hit = flat.nearest(Vec3(0.3, 0.7, h));
      CHECK(hit.distance == doctest::Approx(h).epsilon(1e-12));
    }
  }
  SUBCASE("exact distance lower-bounds the sampled-surface distance") {
    const PointCloud samples = sample_surface(sphere, 10000, 5);
    Rng rng(17);
    for (int k = 0; k < 50; ++k) {
      const Vec3 q = 1.8 * rng.unit_vector() * rng.uniform();
      const double exact = bvh.nearest(q).distance;
      double sampled = std::numeric_limits<double>::infinity();
      for (const Vec3& p : samples.points) sampled = std::min(sampled, (q - p).norm());
      CHECK(exact <= sampled + 1e-12);
    }
  }
}

TEST_CASE("point to segment distance") {
  const SegmentHit hit = point_segment_distance({0, 1, 0}, {-1, 0, 0}, {1, 0, 0});
  CHECK(hit.distance == doctest::Approx(1.0));
  CHECK((hit.closest - Vec3(0, 0, 0)).norm() < 1e-12);

  // beyond an endpoint clamps
  const Vec3 p(3, 1, 0);
  const SegmentHit clamped = point_segment_distance(p, {-1, 0, 0}, {1, 0, 0});
  CHECK(clamped.distance == doctest::Approx((p - Vec3(1, 0, 0)).norm()));

  // degenerate segment
  const SegmentHit point = point_segment_distance({1, 1, 1}, {0, 0, 0}, {0, 0, 0});
  CHECK(point.distance == doctest::Approx(std::sqrt(3.0)));

  // random triples against a dense sampling oracle
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec3 q(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 a(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 b(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double exact = point_segment_distance(q, a, b).distance;
    double brute = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 4000; ++s) {
      brute = std::min(brute, (q - (a + (b - a) * (s / 4000.0))).norm());
    }
    CHECK(exact <= brute + 1e-12);
    CHECK(std::abs(exact - brute) < 1e-6);
  }
}

TEST_CASE("pinhole projection") {
  const CameraIntrinsics k(500, 480, 320, 240, 640, 480);
  const RigidTransform identity;

  const auto center = project(Vec3(0, 0, 2.0), k, identity);
  REQUIRE(center.has_value());
  CHECK((*center - Vec2(320, 240)).norm() < 1e-12);

  const auto off = project(Vec3(0.1, 0, 1.0), k, identity);
  REQUIRE(off.has_value());
  CHECK(off->x() == doctest::Approx(370.0));
  CHECK(off->y() == doctest::Approx(240.0));

  CHECK_FALSE(project(Vec3(0, 0, -1), k, identity).has_value());
  CHECK_FALSE(project(Vec3(0, 0, 0), k, identity).has_value());

  // projection round-trips through backprojection
  const RigidTransform pose =
      RigidTransform::from_axis_angle(Vec3(0.2, 0.4, -0.1), Vec3(0.05, -0.1, 0.6));
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Vec2 px(rng.uniform(0, 640), rng.uniform(0, 480));
    const double depth = rng.uniform(0.2, 5.0);
    const Vec3 p = backproject(px, depth, k, pose);
    const auto reproj = project(p, k, pose);
    REQUIRE(reproj.has_value());
    CHECK((*reproj - px).norm() < 1e-9);
  }

  CHECK_THROWS_AS(CameraIntrinsics(-1, 1, 0, 0, 10, 10), Error);
  CHECK_THROWS_AS(CameraIntrinsics(10, 10, 99, 5, 10, 10), Error);
}

TEST_CASE("voxelize: cube fills the grid") {
  const TriMesh cube = make_box(Vec3(1, 1, 1), 4);
  const VoxelGrid grid = voxelize(cube);
  CHECK(grid.interior_filled());
  const int total = VoxelGrid::kResolution * VoxelGrid::kResolution * VoxelGrid::kResolution;
  CHECK(grid.occupied_count() == total);
}

TEST_CASE("voxelize: sphere volume within 5 percent") {
  const double r = 0.5;
  const TriMesh sphere = make_icosphere(r, 4);
  const VoxelGrid grid = voxelize(sphere);
  REQUIRE(grid.interior_filled());

  // center-inside convention: interior voxels count fully, surface voxels
  // count when their center lies inside the mesh
  const MeshBvh bvh(sphere);
  int inside = 0;
  for (int idx : grid.surface_voxels()) {
    if (bvh.contains(grid.center(idx))) ++inside;
  }
  int interior = 0;
  for (int i = 0; i < VoxelGrid::kResolution * VoxelGrid::kResolution * VoxelGrid::kResolution;
       ++i) {
    if (grid.interior(i)) ++interior;
  }
  const double cell_volume = std::pow(grid.cell_size(), 3);
  const double volume = (interior + inside) * cell_volume;
  const double analytic = 4.0 / 3.0 * M_PI * r * r * r;
  CHECK(std::abs(volume - analytic) / analytic < 0.05);
}

TEST_CASE("voxelize: open patch stays surface-only") {
  const TriMesh patch = flat_square();
  CHECK_FALSE(patch.is_watertight());
  const VoxelGrid grid = voxelize(patch);
  CHECK_FALSE(grid.interior_filled());
  int interior = 0;
  for (int i = 0; i < VoxelGrid::kResolution * VoxelGrid::kResolution * VoxelGrid::kResolution;
       ++i) {
    if (grid.interior(i)) ++interior;
  }
  CHECK(interior == 0);
  CHECK(grid.occupied_count() == static_cast<int>(grid.surface_voxels().size()));
}

TEST_CASE("voxelize: watertight shell is 26-connected") {
  const TriMesh sphere = make_icosphere(0.05, 3);
  const VoxelGrid grid = voxelize(sphere);
  const auto& shell = grid.surface_voxels();
  REQUIRE(!shell.empty());

  std::set<int> remaining(shell.begin(), shell.end());
  std::vector<int> stack = {shell.front()};
  remaining.erase(shell.front());
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    int x, y, z;
    VoxelGrid::unpack(idx, x, y, z);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const int nx = x + dx, ny = y + dy, nz = z + dz;
          if (nx < 0 || ny < 0 || nz < 0 || nx >= 64 || ny >= 64 || nz >= 64) continue;
          const int nidx = VoxelGrid::linear_index(nx, ny, nz);
          if (remaining.count(nidx)) {
            remaining.erase(nidx);
            stack.push_back(nidx);
          }
        }
      }
    }
  }
  CHECK(remaining.empty());
}

TEST_CASE("mesh invariants") {
  CHECK_THROWS_AS(TriMesh({}, {}), Error);
  CHECK_THROWS_AS(TriMesh({Vec3(0, 0, 0)}, {{0, 0, 1}}), Error);
  CHECK(make_icosphere(1.0, 2).is_watertight());
  CHECK(make_box(Vec3(1, 2, 3), 3).is_watertight());
  CHECK(make_cylinder(0.03, 0.1).is_watertight());
  CHECK(make_torus(0.05, 0.02).is_watertight());
}

}  // TEST_SUITE
