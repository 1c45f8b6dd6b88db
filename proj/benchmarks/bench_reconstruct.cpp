#include <benchmark/benchmark.h>

#include "graspkit/reconstruct.hpp"
#include "graspkit/synth.hpp"

using namespace graspkit;

static void BM_RansacReconstruct(benchmark::State& state) {
  SynthScenario scenario;
  scenario.frames = static_cast<int>(state.range(0));
  scenario.noise.detection_sigma_px = 2.0;
  scenario.noise.pose_outlier_fraction = 0.2;
  scenario.seed = 3;
  const SynthGrasp grasp = generate(scenario);
  RansacParams params;
  params.seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ransac_reconstruct(grasp.observation, params));
  }
}
BENCHMARK(BM_RansacReconstruct)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_PnpPose(benchmark::State& state) {
  SynthScenario scenario;
  scenario.frames = 4;
  scenario.seed = 3;
  const SynthGrasp grasp = generate(scenario);
  const Detection2D* det = grasp.observation.find(0, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pnp_pose(*det, grasp.gt_joints, grasp.observation.cameras[0]));
  }
}
BENCHMARK(BM_PnpPose)->Unit(benchmark::kMicrosecond);
