#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "graspkit/json_io.hpp"
#include "graspkit/mesh_io.hpp"
#include "graspkit/rng.hpp"
#include "graspkit/synth.hpp"

using namespace graspkit;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "graspkit_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("mesh: binary PLY round trip with contact") {
  const TriMesh mesh = make_icosphere(0.05, 2);
  Rng rng(1);
  std::vector<double> contact(mesh.vertices().size());
  for (double& c : contact) c = rng.uniform();

  const auto path = (temp_dir() / "sphere.ply").string();
  save_mesh_ply(path, mesh, &contact);
  const MeshWithContact loaded = load_mesh_with_contact(path);

  REQUIRE(loaded.mesh.vertices().size() == mesh.vertices().size());
  REQUIRE(loaded.mesh.faces().size() == mesh.faces().size());
  for (size_t i = 0; i < mesh.vertices().size(); ++i) {
    CHECK((loaded.mesh.vertices()[i] - mesh.vertices()[i]).norm() < 1e-6);
  }
  CHECK(loaded.mesh.faces() == mesh.faces());
  REQUIRE(loaded.contact.has_value());
  for (size_t i = 0; i < contact.size(); ++i) {
    CHECK(std::abs((*loaded.contact)[i] - contact[i]) < 1e-6);
  }
  CHECK(loaded.mesh.is_watertight());
}

TEST_CASE("mesh: OBJ round trip") {
  const TriMesh mesh = make_box(Vec3(0.1, 0.2, 0.05), 2);
  const auto path = (temp_dir() / "box.obj").string();
  save_mesh_obj(path, mesh);
  const TriMesh loaded = load_mesh(path);
  REQUIRE(loaded.vertices().size() == mesh.vertices().size());
  for (size_t i = 0; i < mesh.vertices().size(); ++i) {
    CHECK((loaded.vertices()[i] - mesh.vertices()[i]).norm() < 1e-8);
  }
  CHECK(loaded.faces() == mesh.faces());
}

TEST_CASE("cloud: PLY round trip keeps normals and contact") {
  const TriMesh mesh = make_icosphere(0.04, 2);
  const PointCloud cloud = sample_surface(mesh, 500, 3);
  std::vector<double> contact(cloud.size());
  Rng rng(4);
  for (double& c : contact) c = rng.uniform();

  const auto path = (temp_dir() / "cloud.ply").string();
  save_cloud_ply(path, cloud, &contact);
  const CloudWithContact loaded = load_cloud_ply(path);
  REQUIRE(loaded.cloud.size() == cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK((loaded.cloud.points[i] - cloud.points[i]).norm() < 1e-6);
    CHECK((loaded.cloud.normals[i] - cloud.normals[i]).norm() < 1e-5);
  }
  REQUIRE(loaded.contact.has_value());
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(std::abs((*loaded.contact)[i] - contact[i]) < 1e-6);
  }
}

TEST_CASE("skeleton and kinematic JSON round trips") {
  Rng rng(5);
  KinematicHand hand;
  hand.handedness = Handedness::kLeft;
  hand.shape.global = 1.1;
  for (double& s : hand.shape.fingers) s = rng.uniform(0.9, 1.1);
  hand.root_rotation = Vec3(0.3, -0.2, 0.8);
  hand.root_translation = Vec3(0.1, 0.2, -0.4);
  for (FingerPose& f : hand.fingers) {
    f.abduction = rng.uniform(-0.3, 0.3);
    f.knuckle_flex = rng.uniform(0, 1.2);
  }

  const auto kin_path = (temp_dir() / "hand.json").string();
  save_kinematic_json(kin_path, hand);
  const KinematicHand loaded = load_kinematic_json(kin_path);
  CHECK(loaded.handedness == hand.handedness);
  CHECK(loaded.shape.global == hand.shape.global);
  CHECK(loaded.root_rotation == hand.root_rotation);
  for (int f = 0; f < 5; ++f) {
    CHECK(loaded.fingers[f].abduction == hand.fingers[f].abduction);
    CHECK(loaded.fingers[f].knuckle_flex == hand.fingers[f].knuckle_flex);
  }

  const HandSkeleton skeleton = forward_kinematics(hand);
  const auto sk_path = (temp_dir() / "skeleton.json").string();
  save_skeleton_json(sk_path, skeleton);
  const HandSkeleton sk_loaded = load_skeleton_json(sk_path);
  CHECK(sk_loaded.handedness == skeleton.handedness);
  for (int j = 0; j < 21; ++j) {
    CHECK((sk_loaded.joints[j] - skeleton.joints[j]).norm() == 0.0);
  }
}

TEST_CASE("observation and result JSON round trips") {
  SynthScenario scenario;
  scenario.frames = 4;
  scenario.seed = 6;
  scenario.noise.detection_sigma_px = 1.0;
  const SynthGrasp grasp = generate(scenario);

  const auto obs_path = (temp_dir() / "obs.json").string();
  save_observation_json(obs_path, grasp.observation);
  const GraspObservation loaded = load_observation_json(obs_path);
  REQUIRE(loaded.cameras.size() == grasp.observation.cameras.size());
  REQUIRE(loaded.frames.size() == grasp.observation.frames.size());
  REQUIRE(loaded.detections.size() == grasp.observation.detections.size());
  for (size_t c = 0; c < loaded.cameras.size(); ++c) {
    CHECK((loaded.cameras[c].world_to_camera.matrix() -
           grasp.observation.cameras[c].world_to_camera.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (size_t d = 0; d < loaded.detections.size(); ++d) {
    for (int j = 0; j < 21; ++j) {
      CHECK((loaded.detections[d].joints[j] -
             grasp.observation.detections[d].joints[j]).norm() < 1e-12);
    }
  }

  ReconstructionResult result;
  result.joints = grasp.gt_joints;
  result.inliers = {{0, 0}, {1, 2}};
  result.inlier_errors_px = {0.5, 1.5};
  result.mean_reprojection_px = 1.0;
  result.rescued.push_back({3, grasp.observation.frames[3].object_to_world});
  const auto res_path = (temp_dir() / "result.json").string();
  save_result_json(res_path, result, 1e-7);
  const ReconstructionResult res_loaded = load_result_json(res_path);
  CHECK(res_loaded.inliers == result.inliers);
  CHECK(res_loaded.mean_reprojection_px == result.mean_reprojection_px);
  REQUIRE(res_loaded.rescued.size() == 1);
  CHECK(res_loaded.rescued[0].frame == 3);
}

TEST_CASE("scenario, calibration and grasp-set round trips") {
  SynthScenario scenario;
  scenario.object.kind = ObjectKind::kCylinder;
  scenario.object.size = Vec3(0.03, 0.12, 0);
  scenario.frames = 7;
  scenario.seed = 123;
  scenario.noise.detection_sigma_px = 1.5;
  scenario.intent = Intent::kHandoff;
  scenario.participant = 14;
  const auto path = (temp_dir() / "scenario.json").string();
  save_scenario_json(path, scenario);
  const SynthScenario loaded = load_scenario_json(path);
  CHECK(loaded.object.kind == ObjectKind::kCylinder);
  CHECK(loaded.frames == 7);
  CHECK(loaded.seed == 123);
  CHECK(loaded.noise.detection_sigma_px == 1.5);
  CHECK(loaded.intent == Intent::kHandoff);
  CHECK(loaded.participant == 14);

  Calibration calib;
  calib.slope = 2.5;
  calib.intercept = -1.5;
  calib.samples = 4700;
  const auto cpath = (temp_dir() / "calib.json").string();
  save_calibration_json(cpath, calib, 99);
  const Calibration cloaded = load_calibration_json(cpath);
  CHECK(cloaded.slope == calib.slope);
  CHECK(cloaded.intercept == calib.intercept);
  CHECK(cloaded.samples == calib.samples);

  // grasp set with PLY sidecars
  SynthScenario gscenario;
  gscenario.frames = 2;
  gscenario.seed = 9;
  const SynthGrasp grasp = generate(gscenario);
  const auto dir = temp_dir();
  save_mesh_ply((dir / "object.ply").string(), *grasp.object_mesh);
  save_mesh_ply((dir / "object_contact.ply").string(), *grasp.object_mesh,
                &grasp.vertex_contact.values);
  const auto gpath = (dir / "graspset.json").string();
  save_graspset_json(gpath, {grasp.record}, {"object.ply"}, {"object_contact.ply"});
  const GraspSet gset = load_graspset_json(gpath);
  REQUIRE(gset.size() == 1);
  CHECK(gset[0].object_id == grasp.record.object_id);
  CHECK(gset[0].contact.size() == grasp.vertex_contact.size());
  REQUIRE(gset[0].hands.size() == 1);
  for (int j = 0; j < 21; ++j) {
    CHECK((gset[0].hands[0].joints[j] - grasp.record.hands[0].joints[j]).norm() < 1e-12);
  }
}

TEST_CASE("feature matrix round trip") {
  SynthScenario scenario;
  scenario.frames = 2;
  scenario.seed = 10;
  scenario.cloud_points = 200;
  const SynthGrasp grasp = generate(scenario);
  FeatureMatrix fm = compute_features(FeatureFamily::kSkeleton, grasp.cloud,
                                      grasp.record.hands);
  fm = occlusion_dropout(fm, grasp.record.hands, 42);

  const auto dir = temp_dir();
  const auto bin = (dir / "features.bin").string();
  const auto sidecar = (dir / "features.json").string();
  save_features(bin, sidecar, fm);
  const FeatureMatrix loaded = load_features(bin, sidecar);
  CHECK(loaded.family == fm.family);
  REQUIRE(loaded.values.rows() == fm.values.rows());
  CHECK((loaded.values - fm.values).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(loaded.dropout.applied);
  CHECK(loaded.dropout.dropped_joints == fm.dropout.dropped_joints);
}

TEST_CASE("error reporting") {
  CHECK_THROWS_WITH_AS(load_skeleton_json("/nonexistent/path.json"),
                       doctest::Contains("/nonexistent/path.json"), Error);

  const auto bad = (temp_dir() / "bad.json").string();
  {
    std::ofstream out(bad);
    out << "{\n  \"joints\": [1, 2,\n}\n";
  }
  try {
    load_skeleton_json(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
}

TEST_CASE("content digests are stable") {
  const auto path = (temp_dir() / "digest.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "hello graspkit";
  }
  const std::string a = content_digest(path);
  const std::string b = content_digest(path);
  CHECK(a == b);
  CHECK(a.rfind("fnv1a64:", 0) == 0);
  {
    std::ofstream out(path, std::ios::binary);
    out << "hello graspkit!";
  }
  CHECK(content_digest(path) != a);
}

}  // TEST_SUITE
