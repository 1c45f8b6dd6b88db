#include <benchmark/benchmark.h>

#include "graspkit/bvh.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/rng.hpp"
#include "graspkit/voxel.hpp"

using namespace graspkit;

static void BM_BvhNearest(benchmark::State& state) {
  const TriMesh mesh = make_icosphere(0.05, 4);
  const MeshBvh bvh(mesh);
  Rng rng(7);
  std::vector<Vec3> queries(1024);
  for (Vec3& q : queries) q = 0.2 * rng.unit_vector();
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvh.nearest(queries[i++ & 1023]));
  }
}
BENCHMARK(BM_BvhNearest);

static void BM_Voxelize(benchmark::State& state) {
  const TriMesh mesh = make_icosphere(0.05, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(voxelize(mesh));
  }
}
BENCHMARK(BM_Voxelize)->Arg(2)->Arg(3);

static void BM_SampleSurface(benchmark::State& state) {
  const TriMesh mesh = make_icosphere(0.05, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_surface(mesh, static_cast<int>(state.range(0)), 11));
  }
}
BENCHMARK(BM_SampleSurface)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
