#include "graspkit/json_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "graspkit/features.hpp"
#include "graspkit/mesh_io.hpp"

namespace graspkit {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column
    size_t line = 1, column = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(path + ": malformed JSON at line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + e.what());
  }
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat4_to_json(const RigidTransform& t) {
  const Mat4 m = t.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) rows.push_back(m(r, c));
  }
  return rows;
}

RigidTransform mat4_from_json(const json& j) {
  if (!j.is_array() || j.size() != 16) throw Error("expected a row-major 4x4 matrix");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
  }
  return RigidTransform::from_matrix(m);
}

std::string handedness_name(Handedness h) {
  return h == Handedness::kRight ? "right" : "left";
}

Handedness handedness_from_name(const std::string& name) {
  if (name == "right") return Handedness::kRight;
  if (name == "left") return Handedness::kLeft;
  throw Error("unknown handedness: " + name);
}

}  // namespace

void save_skeleton_json(const std::string& path, const HandSkeleton& skeleton) {
  json j;
  j["handedness"] = handedness_name(skeleton.handedness);
  j["joints"] = json::array();
  for (const Vec3& joint : skeleton.joints) j["joints"].push_back(vec3_to_json(joint));
  write_file(path, j);
}

HandSkeleton load_skeleton_json(const std::string& path) {
  const json j = parse_file(path);
  HandSkeleton skeleton;
  skeleton.handedness = handedness_from_name(j.at("handedness").get<std::string>());
  const json& joints = j.at("joints");
  if (joints.size() != 21) throw Error(path + ": expected 21 joints");
  for (int i = 0; i < 21; ++i) skeleton.joints[i] = vec3_from_json(joints[i]);
  skeleton.validate();
  return skeleton;
}

void save_kinematic_json(const std::string& path, const KinematicHand& hand) {
  json j;
  j["handedness"] = handedness_name(hand.handedness);
  j["shape"]["global"] = hand.shape.global;
  j["shape"]["fingers"] = hand.shape.fingers;
  j["pose"]["root_rotation"] = vec3_to_json(hand.root_rotation);
  j["pose"]["root_translation"] = vec3_to_json(hand.root_translation);
  j["pose"]["fingers"] = json::array();
  for (const FingerPose& f : hand.fingers) {
    j["pose"]["fingers"].push_back(
        json::array({f.abduction, f.knuckle_flex, f.middle_flex, f.distal_flex}));
  }
  write_file(path, j);
}

KinematicHand load_kinematic_json(const std::string& path) {
  const json j = parse_file(path);
  KinematicHand hand;
  hand.handedness = handedness_from_name(j.at("handedness").get<std::string>());
  hand.shape.global = j.at("shape").at("global").get<double>();
  const json& fingers = j.at("shape").at("fingers");
  if (fingers.size() != 5) throw Error(path + ": expected 5 finger scales");
  for (int f = 0; f < 5; ++f) hand.shape.fingers[f] = fingers[f].get<double>();
  hand.root_rotation = vec3_from_json(j.at("pose").at("root_rotation"));
  hand.root_translation = vec3_from_json(j.at("pose").at("root_translation"));
  const json& poses = j.at("pose").at("fingers");
  if (poses.size() != 5) throw Error(path + ": expected 5 finger poses");
  for (int f = 0; f < 5; ++f) {
    hand.fingers[f].abduction = poses[f][0].get<double>();
    hand.fingers[f].knuckle_flex = poses[f][1].get<double>();
    hand.fingers[f].middle_flex = poses[f][2].get<double>();
    hand.fingers[f].distal_flex = poses[f][3].get<double>();
  }
  return hand;
}

void save_joints_json(const std::string& path, const JointArray& joints) {
  json j;
  j["joints"] = json::array();
  for (const Vec3& joint : joints) j["joints"].push_back(vec3_to_json(joint));
  write_file(path, j);
}

JointArray load_joints_json(const std::string& path) {
  const json j = parse_file(path);
  const json& joints = j.at("joints");
  if (joints.size() != 21) throw Error(path + ": expected 21 joints");
  JointArray out;
  for (int i = 0; i < 21; ++i) out[i] = vec3_from_json(joints[i]);
  return out;
}

void save_observation_json(const std::string& path, const GraspObservation& obs) {
  json j;
  j["cameras"] = json::array();
  for (const CameraView& cam : obs.cameras) {
    json c;
    c["fx"] = cam.intrinsics.fx;
    c["fy"] = cam.intrinsics.fy;
    c["cx"] = cam.intrinsics.cx;
    c["cy"] = cam.intrinsics.cy;
    c["width"] = cam.intrinsics.width;
    c["height"] = cam.intrinsics.height;
    c["extrinsic"] = mat4_to_json(cam.world_to_camera);
    j["cameras"].push_back(c);
  }
  j["frames"] = json::array();
  for (const FramePose& frame : obs.frames) {
    json f;
    f["pose"] = mat4_to_json(frame.object_to_world);
    f["valid"] = frame.valid;
    j["frames"].push_back(f);
  }
  j["detections"] = json::array();
  for (const Detection2D& det : obs.detections) {
    json d;
    d["frame"] = det.frame;
    d["camera"] = det.camera;
    d["joints"] = json::array();
    for (const Vec3& joint : det.joints) d["joints"].push_back(vec3_to_json(joint));
    j["detections"].push_back(d);
  }
  write_file(path, j);
}

GraspObservation load_observation_json(const std::string& path) {
  const json j = parse_file(path);
  GraspObservation obs;
  for (const json& c : j.at("cameras")) {
    CameraView view{CameraIntrinsics(c.at("fx").get<double>(), c.at("fy").get<double>(),
                                     c.at("cx").get<double>(), c.at("cy").get<double>(),
                                     c.at("width").get<int>(), c.at("height").get<int>()),
                    mat4_from_json(c.at("extrinsic"))};
    obs.cameras.push_back(view);
  }
  for (const json& f : j.at("frames")) {
    obs.frames.push_back({mat4_from_json(f.at("pose")), f.at("valid").get<bool>()});
  }
  for (const json& d : j.at("detections")) {
    Detection2D det;
    det.frame = d.at("frame").get<int>();
    det.camera = d.at("camera").get<int>();
    const json& joints = d.at("joints");
    if (joints.size() != 21) throw Error(path + ": detection needs 21 joints");
    for (int i = 0; i < 21; ++i) det.joints[i] = vec3_from_json(joints[i]);
    obs.detections.push_back(det);
  }
  obs.validate();
  return obs;
}

void save_result_json(const std::string& path, const ReconstructionResult& result,
                      double mean_error_vs_gt_m) {
  json j;
  j["joints"] = json::array();
  for (const Vec3& joint : result.joints) j["joints"].push_back(vec3_to_json(joint));
  j["inliers"] = json::array();
  for (const PairId& pair : result.inliers) {
    j["inliers"].push_back(json::array({pair.frame, pair.camera}));
  }
  j["inlier_errors_px"] = result.inlier_errors_px;
  j["mean_reprojection_px"] = result.mean_reprojection_px;
  j["rescued"] = json::array();
  for (const auto& rescue : result.rescued) {
    json r;
    r["frame"] = rescue.frame;
    r["pose"] = mat4_to_json(rescue.pose);
    j["rescued"].push_back(r);
  }
  if (mean_error_vs_gt_m >= 0) j["mean_error_vs_gt_m"] = mean_error_vs_gt_m;
  write_file(path, j);
}

ReconstructionResult load_result_json(const std::string& path) {
  const json j = parse_file(path);
  ReconstructionResult result;
  const json& joints = j.at("joints");
  if (joints.size() != 21) throw Error(path + ": expected 21 joints");
  for (int i = 0; i < 21; ++i) result.joints[i] = vec3_from_json(joints[i]);
  for (const json& pair : j.at("inliers")) {
    result.inliers.push_back({pair[0].get<int>(), pair[1].get<int>()});
  }
  result.inlier_errors_px = j.at("inlier_errors_px").get<std::vector<double>>();
  result.mean_reprojection_px = j.at("mean_reprojection_px").get<double>();
  for (const json& r : j.at("rescued")) {
    result.rescued.push_back({r.at("frame").get<int>(), mat4_from_json(r.at("pose"))});
  }
  return result;
}

void save_calibration_json(const std::string& path, const Calibration& calibration,
                           uint64_t seed) {
  json j;
  j["a"] = calibration.slope;
  j["b"] = calibration.intercept;
  j["n"] = calibration.samples;
  j["seed"] = seed;
  write_file(path, j);
}

Calibration load_calibration_json(const std::string& path) {
  const json j = parse_file(path);
  Calibration calibration;
  calibration.slope = j.at("a").get<double>();
  calibration.intercept = j.at("b").get<double>();
  calibration.samples = j.at("n").get<int>();
  return calibration;
}

void save_scenario_json(const std::string& path, const SynthScenario& scenario) {
  json j;
  j["object"]["kind"] = object_kind_name(scenario.object.kind);
  j["object"]["size"] = vec3_to_json(scenario.object.size);
  j["cameras"] = scenario.cameras;
  j["frames"] = scenario.frames;
  j["noise"]["detection_sigma_px"] = scenario.noise.detection_sigma_px;
  j["noise"]["pose_outlier_fraction"] = scenario.noise.pose_outlier_fraction;
  j["noise"]["detection_outlier_fraction"] = scenario.noise.detection_outlier_fraction;
  j["noise"]["dropout_rate"] = scenario.noise.dropout_rate;
  j["seed"] = scenario.seed;
  j["hand_scale"] = scenario.hand_scale;
  j["contact_falloff"] = scenario.contact_falloff;
  j["cloud_points"] = scenario.cloud_points;
  j["object_id"] = scenario.object_id;
  j["intent"] = intent_name(scenario.intent);
  j["participant"] = scenario.participant;
  write_file(path, j);
}

SynthScenario load_scenario_json(const std::string& path) {
  const json j = parse_file(path);
  SynthScenario scenario;
  if (j.contains("object")) {
    scenario.object.kind = object_kind_from_name(j["object"].at("kind").get<std::string>());
    if (j["object"].contains("size")) scenario.object.size = vec3_from_json(j["object"]["size"]);
  }
  scenario.cameras = j.value("cameras", scenario.cameras);
  scenario.frames = j.value("frames", scenario.frames);
  if (j.contains("noise")) {
    const json& n = j["noise"];
    scenario.noise.detection_sigma_px =
        n.value("detection_sigma_px", scenario.noise.detection_sigma_px);
    scenario.noise.pose_outlier_fraction =
        n.value("pose_outlier_fraction", scenario.noise.pose_outlier_fraction);
    scenario.noise.detection_outlier_fraction =
        n.value("detection_outlier_fraction", scenario.noise.detection_outlier_fraction);
    scenario.noise.dropout_rate = n.value("dropout_rate", scenario.noise.dropout_rate);
  }
  scenario.seed = j.value("seed", scenario.seed);
  scenario.hand_scale = j.value("hand_scale", scenario.hand_scale);
  scenario.contact_falloff = j.value("contact_falloff", scenario.contact_falloff);
  scenario.cloud_points = j.value("cloud_points", scenario.cloud_points);
  scenario.object_id = j.value("object_id", scenario.object_id);
  if (j.contains("intent")) scenario.intent = intent_from_name(j["intent"].get<std::string>());
  scenario.participant = j.value("participant", scenario.participant);
  scenario.validate();
  return scenario;
}

void save_graspset_json(const std::string& path, const GraspSet& grasps,
                        const std::vector<std::string>& mesh_paths,
                        const std::vector<std::string>& contact_paths) {
  if (grasps.size() != mesh_paths.size() || grasps.size() != contact_paths.size()) {
    throw Error("save_graspset_json: path lists must match the grasp count");
  }
  json j;
  j["grasps"] = json::array();
  for (size_t i = 0; i < grasps.size(); ++i) {
    json g;
    g["object_id"] = grasps[i].object_id;
    g["intent"] = intent_name(grasps[i].intent);
    g["participant"] = grasps[i].participant;
    g["mesh"] = mesh_paths[i];
    g["contact"] = contact_paths[i];
    g["hands"] = json::array();
    for (const HandSkeleton& hand : grasps[i].hands) {
      json h;
      h["handedness"] = handedness_name(hand.handedness);
      h["joints"] = json::array();
      for (const Vec3& joint : hand.joints) h["joints"].push_back(vec3_to_json(joint));
      g["hands"].push_back(h);
    }
    j["grasps"].push_back(g);
  }
  write_file(path, j);
}

GraspSet load_graspset_json(const std::string& path) {
  const json j = parse_file(path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  GraspSet grasps;

  // Meshes referenced repeatedly are shared.
  std::map<std::string, std::shared_ptr<const TriMesh>> mesh_cache;
  for (const json& g : j.at("grasps")) {
    GraspRecord record;
    record.object_id = g.at("object_id").get<std::string>();
    record.intent = intent_from_name(g.at("intent").get<std::string>());
    record.participant = g.at("participant").get<int>();

    const std::string mesh_rel = g.at("mesh").get<std::string>();
    const std::string mesh_path = (base / mesh_rel).string();
    auto it = mesh_cache.find(mesh_path);
    if (it == mesh_cache.end()) {
      it = mesh_cache
               .emplace(mesh_path, std::make_shared<const TriMesh>(load_mesh(mesh_path)))
               .first;
    }
    record.mesh = it->second;

    const std::string contact_path = (base / g.at("contact").get<std::string>()).string();
    const MeshWithContact loaded = load_mesh_with_contact(contact_path);
    if (!loaded.contact) throw Error(contact_path + ": no contact property");
    record.contact = ContactMap(*loaded.contact);
    if (record.contact.size() != static_cast<int>(record.mesh->vertices().size())) {
      throw Error(path + ": contact map does not match the mesh");
    }

    for (const json& h : g.at("hands")) {
      HandSkeleton hand;
      hand.handedness = handedness_from_name(h.at("handedness").get<std::string>());
      const json& joints = h.at("joints");
      if (joints.size() != 21) throw Error(path + ": hand needs 21 joints");
      for (int i = 0; i < 21; ++i) hand.joints[i] = vec3_from_json(joints[i]);
      record.hands.push_back(hand);
    }
    grasps.push_back(std::move(record));
  }
  return grasps;
}

void save_features(const std::string& bin_path, const std::string& sidecar_path,
                   const FeatureMatrix& features) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot write " + bin_path);
  for (int r = 0; r < features.values.rows(); ++r) {
    for (int c = 0; c < features.values.cols(); ++c) {
      const float f = static_cast<float>(features.values(r, c));
      bin.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  json j;
  j["family"] = family_name(features.family);
  j["rows"] = features.values.rows();
  j["cols"] = features.values.cols();
  if (features.dropout.applied) {
    j["dropout"]["camera_position"] = vec3_to_json(features.dropout.camera_position);
    j["dropout"]["dropped_joints"] = features.dropout.dropped_joints;
  } else {
    j["dropout"] = nullptr;
  }
  write_file(sidecar_path, j);
}

FeatureMatrix load_features(const std::string& bin_path, const std::string& sidecar_path) {
  const json j = parse_file(sidecar_path);
  FeatureMatrix features;
  features.family = family_from_name(j.at("family").get<std::string>());
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  if (cols != feature_dim(features.family)) {
    throw Error(sidecar_path + ": dimensionality does not match the family");
  }
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot open " + bin_path);
  features.values.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      float f;
      bin.read(reinterpret_cast<char*>(&f), 4);
      if (!bin) throw Error(bin_path + ": truncated feature file");
      features.values(r, c) = f;
    }
  }
  if (!j.at("dropout").is_null()) {
    features.dropout.applied = true;
    features.dropout.camera_position = vec3_from_json(j["dropout"].at("camera_position"));
    features.dropout.dropped_joints =
        j["dropout"].at("dropped_joints").get<std::vector<std::vector<int>>>();
  }
  return features;
}

void save_contact_json(const std::string& path, const ContactMap& map) {
  write_file(path, json(map.values));
}

ContactMap load_contact_json(const std::string& path) {
  return ContactMap(load_scalar_array_json(path));
}

std::vector<double> load_scalar_array_json(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_array()) throw Error(path + ": expected a JSON array of numbers");
  return j.get<std::vector<double>>();
}

std::string content_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  uint64_t hash = 0xCBF29CE484222325ull;
  char buffer[8192];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001B3ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return std::string("fnv1a64:") + hex;
}

}  // namespace graspkit
