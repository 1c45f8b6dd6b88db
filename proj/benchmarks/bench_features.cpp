#include <benchmark/benchmark.h>

#include "graspkit/features.hpp"
#include "graspkit/synth.hpp"

using namespace graspkit;

namespace {

const SynthGrasp& grasp_fixture() {
  static const SynthGrasp grasp = [] {
    SynthScenario scenario;
    scenario.frames = 2;
    scenario.seed = 9;
    scenario.cloud_points = 4000;
    return generate(scenario);
  }();
  return grasp;
}

}  // namespace

static void BM_Features(benchmark::State& state) {
  const SynthGrasp& grasp = grasp_fixture();
  const auto family = static_cast<FeatureFamily>(state.range(0));
  std::vector<HandProxy> proxies;
  for (const HandSkeleton& h : grasp.record.hands) proxies.push_back(make_hand_proxy(h));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_features(family, grasp.cloud, grasp.record.hands, proxies));
  }
  state.SetItemsProcessed(state.iterations() * grasp.cloud.size());
}
BENCHMARK(BM_Features)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

static void BM_ProxySignedDistance(benchmark::State& state) {
  const SynthGrasp& grasp = grasp_fixture();
  const HandProxy proxy = make_hand_proxy(grasp.record.hands[0]);
  size_t i = 0;
  const auto& pts = grasp.cloud.points;
  for (auto _ : state) {
    benchmark::DoNotOptimize(proxy_signed_distance(proxy, pts[i++ % pts.size()]));
  }
}
BENCHMARK(BM_ProxySignedDistance);
