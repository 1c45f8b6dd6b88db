#include <doctest.h>

#include <cmath>

#include "graspkit/heuristic.hpp"
#include "graspkit/metrics.hpp"
#include "graspkit/rng.hpp"
#include "graspkit/synth.hpp"

using namespace graspkit;

namespace {

// Points at controlled signed distance from one capsule of a rest hand.
struct ProbeSet {
  HandProxy proxy;
  PointCloud cloud;
  std::vector<double> signed_distances;
};

ProbeSet probes_at(const std::vector<double>& distances) {
  KinematicHand hand;
  const HandSkeleton rest = forward_kinematics(hand);
  ProbeSet out;
  out.proxy = make_hand_proxy(rest);
  // middle fingertip capsule, probing along +y away from everything else
  const Capsule& tip = out.proxy.capsules[11];
  const Vec3 beyond = tip.b + Vec3(0, 1, 0) * 1.0;
  for (double d : distances) {
    const Vec3 p = tip.b + Vec3(0, 1, 0) * (tip.radius + d);
    out.cloud.points.push_back(p);
    out.cloud.normals.push_back((beyond - p).normalized());
    out.signed_distances.push_back(d);
  }
  return out;
}

}  // namespace

TEST_SUITE("heuristic") {

TEST_CASE("psi ramp values") {
  const double d_max = 0.01;
  const ProbeSet set = probes_at({0.0, d_max, d_max / 2, 2 * d_max, -0.004, 0.0075});
  const PsiField field = psi(set.cloud, set.proxy, d_max);
  CHECK(field.values[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(field.values[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(field.values[2] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(field.values[3] == 0.0);
  CHECK(field.values[4] == doctest::Approx(1.4).epsilon(1e-9));  // penetration grows psi
  CHECK(field.values[5] == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("psi is monotone in the signed distance and Lipschitz") {
  const double d_max = 0.01;
  std::vector<double> distances;
  for (int i = 0; i < 60; ++i) distances.push_back(-0.005 + i * 0.0005);
  const ProbeSet set = probes_at(distances);
  const PsiField field = psi(set.cloud, set.proxy, d_max);
  for (size_t i = 1; i < field.values.size(); ++i) {
    CHECK(field.values[i] <= field.values[i - 1] + 1e-12);
  }

  // continuity under small perturbations of the query point
  Rng rng(12);
  const double lipschitz = 2.0 / d_max;
  for (int k = 0; k < 200; ++k) {
    PointCloud pair;
    const Vec3 a(rng.uniform(-0.1, 0.15), rng.uniform(-0.1, 0.25), rng.uniform(-0.1, 0.1));
    const Vec3 b = a + 1e-4 * rng.unit_vector();
    pair.points = {a, b};
    pair.normals = {Vec3::UnitZ(), Vec3::UnitZ()};
    const PsiField f = psi(pair, set.proxy, d_max);
    CHECK(std::abs(f.values[0] - f.values[1]) <= lipschitz * (a - b).norm() + 1e-12);
  }
}

TEST_CASE("calibration") {
  SUBCASE("recovers an exact linear relation") {
    PsiField field;
    field.d_max = 0.01;
    Rng rng(13);
    std::vector<double> gt;
    for (int i = 0; i < 500; ++i) {
      const double v = rng.uniform(0.0, 1.0);
      field.values.push_back(v);
      gt.push_back(std::clamp(0.3 * v + 0.1, 0.0, 1.0));  // never clamps on [0,1]
    }
    const Calibration calib = calibrate(field, ContactMap(gt), 400, 7);
    CHECK(calib.slope == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(calib.intercept == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(calib.samples == 400);
  }

  SUBCASE("independent noise gives a slope near zero") {
    Rng rng(14);
    const int trials = 30;
    int inside = 0;
    for (int t = 0; t < trials; ++t) {
      PsiField field;
      field.d_max = 0.01;
      std::vector<double> gt;
      const int n = 800;
      for (int i = 0; i < n; ++i) {
        field.values.push_back(rng.uniform());
        gt.push_back(rng.uniform());
      }
      const Calibration calib = calibrate(field, ContactMap(gt), n, t);
      // OLS slope sd under independence: sigma_y / (sigma_x sqrt(n))
      const double sigma = (1.0 / std::sqrt(12.0)) / ((1.0 / std::sqrt(12.0)) * std::sqrt(n));
      if (std::abs(calib.slope) < 3.0 * sigma) ++inside;
    }
    CHECK(inside >= trials - 3);
  }

  SUBCASE("sample count clamps to the available points") {
    PsiField field;
    field.d_max = 0.01;
    std::vector<double> gt;
    for (int i = 0; i < 50; ++i) {
      field.values.push_back(i / 50.0);
      gt.push_back(std::clamp(0.5 * i / 50.0, 0.0, 1.0));
    }
    const Calibration calib = calibrate(field, ContactMap(gt), 4700, 3);
    CHECK(calib.samples == 50);
    CHECK(calib.slope == doctest::Approx(0.5).epsilon(1e-9));
  }

  SUBCASE("constant psi is degenerate") {
    PsiField field;
    field.values.assign(100, 0.25);
    CHECK_THROWS_AS(calibrate(field, ContactMap(std::vector<double>(100, 0.5)), 50, 1), Error);
  }

  SUBCASE("deterministic for a fixed seed") {
    Rng rng(15);
    PsiField field;
    std::vector<double> gt;
    for (int i = 0; i < 300; ++i) {
      field.values.push_back(rng.uniform());
      gt.push_back(rng.uniform());
    }
    const Calibration a = calibrate(field, ContactMap(gt), 100, 42);
    const Calibration b = calibrate(field, ContactMap(gt), 100, 42);
    CHECK(a.slope == b.slope);
    CHECK(a.intercept == b.intercept);
  }
}

TEST_CASE("prediction clamps to the unit interval") {
  PsiField field;
  field.values = {0.0, 0.5, 1.0, 1.4};
  Calibration calib;
  calib.slope = 2.5;
  calib.intercept = -1.5;
  calib.samples = 100;
  const ContactMap pred = heuristic_predict(field, calib);
  CHECK(pred[0] == 0.0);
  CHECK(pred[1] == 0.0);  // 2.5*0.5-1.5 = -0.25, clamped
  CHECK(pred[2] == 1.0);
  CHECK(pred[3] == 1.0);  // 2.0 clamped

  Calibration zero;
  zero.slope = 1.0;
  zero.intercept = 0.0;
  zero.samples = 10;
  PsiField silent;
  silent.values.assign(5, 0.0);
  for (double v : heuristic_predict(silent, zero).values) CHECK(v == 0.0);

  Calibration unfitted;
  unfitted.samples = 0;
  CHECK_THROWS_AS(heuristic_predict(field, unfitted), Error);
}

TEST_CASE("calibration improves the rebalanced score on synthetic grasps") {
  int improved = 0;
  const int seeds = 8;
  for (int s = 0; s < seeds; ++s) {
    SynthScenario scenario;
    scenario.frames = 2;
    scenario.seed = 100 + s;
    scenario.cloud_points = 2500;
    const SynthGrasp grasp = generate(scenario);
    std::vector<HandProxy> proxies;
    for (const HandSkeleton& h : grasp.record.hands) proxies.push_back(make_hand_proxy(h));

    const PsiField field = psi(grasp.cloud, proxies);
    const Calibration calib = calibrate(field, grasp.cloud_contact, 4700, 11);
    const ContactMap calibrated = heuristic_predict(field, calib);

    Calibration identity;
    identity.slope = 1.0;
    identity.intercept = 0.0;
    identity.samples = 2;
    const ContactMap raw = heuristic_predict(field, identity);

    const double auc_cal = rebalanced_auc(calibrated, grasp.cloud_contact).auc_percent;
    const double auc_raw = rebalanced_auc(raw, grasp.cloud_contact).auc_percent;
    if (auc_cal >= auc_raw) ++improved;
    CHECK(auc_cal > 85.0);
  }
  CHECK(improved > seeds / 2);
}

}  // TEST_SUITE
