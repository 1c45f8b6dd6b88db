// graspkit command line: reproducible grasp-capture and contact-modeling
// pipelines over JSON / PLY / flat-binary artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graspkit/analysis.hpp"
#include "graspkit/bvh.hpp"
#include "graspkit/contact.hpp"
#include "graspkit/features.hpp"
#include "graspkit/heuristic.hpp"
#include "graspkit/json_io.hpp"
#include "graspkit/mesh_io.hpp"
#include "graspkit/metrics.hpp"
#include "graspkit/mlp.hpp"
#include "graspkit/reconstruct.hpp"
#include "graspkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graspkit;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Manifest {
  std::string command;
  json config = json::object();
  std::map<std::string, std::string> inputs;  // path -> digest
  std::vector<std::string> outputs;
};

void require_input(const std::string& path, Manifest& manifest) {
  if (!fs::exists(path)) throw Error("missing input file: " + path);
  manifest.inputs[path] = content_digest(path);
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const Manifest& manifest) {
  json j;
  j["tool"] = "graspkit";
  j["version"] = kVersion;
  j["command"] = manifest.command;
  j["config"] = manifest.config;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
  std::ofstream config(dir / "config.json");
  config << manifest.config.dump(2) << '\n';
}

// Overlay order: defaults < config file < explicit flags. Unknown keys in
// the config file are rejected.
class ConfigOverlay {
 public:
  ConfigOverlay(CLI::App* app, std::string path) : app_(app) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw Error("missing config file: " + path);
    std::ifstream in(path);
    const std::string text((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    try {
      file_ = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(path + ": malformed JSON: " + e.what());
    }
    if (!file_.is_object()) throw Error(path + ": config must be a JSON object");
  }

  template <typename T>
  void apply(const std::string& key, const std::string& flag, T& value) {
    known_.insert(key);
    if (!file_.contains(key)) return;
    if (app_->count(flag) > 0) return;  // explicit flag wins
    value = file_[key].get<T>();
  }

  void finish() const {
    for (const auto& [key, v] : file_.items()) {
      if (!known_.count(key)) throw Error("unknown config key: " + key);
    }
  }

 private:
  CLI::App* app_;
  json file_ = json::object();
  std::set<std::string> known_;
};

std::vector<HandSkeleton> load_hands(const std::vector<std::string>& paths, Manifest& manifest) {
  if (paths.empty()) throw Error("at least one hand skeleton is required");
  std::vector<HandSkeleton> hands;
  for (const std::string& p : paths) {
    require_input(p, manifest);
    hands.push_back(load_skeleton_json(p));
  }
  return hands;
}

CloudWithContact load_cloud_input(const std::string& path, Manifest& manifest) {
  require_input(path, manifest);
  return load_cloud_ply(path);
}

// -------------------------------------------------------------------------

struct SynthArgs {
  uint64_t seed = 0;
  std::string out;
  std::string scenario_path;
  std::string config_path;
  std::string object = "sphere";
  std::vector<double> size;
  int frames = 50;
  int cameras = 3;
  double noise_px = 0.0;
  double pose_outliers = 0.0;
  double detection_outliers = 0.0;
  double dropout = 0.0;
  int cloud_points = 0;
  std::string intent = "use";
  int participant = 0;
  std::string object_id;
};

int run_synth(CLI::App* cmd, const SynthArgs& args) {
  Manifest manifest;
  manifest.command = "synth";

  SynthScenario scenario;
  if (!args.scenario_path.empty()) {
    require_input(args.scenario_path, manifest);
    scenario = load_scenario_json(args.scenario_path);
  }
  ConfigOverlay overlay(cmd, args.config_path);
  std::string object = args.object;
  overlay.apply("object", "--object", object);
  int frames = args.frames, cameras = args.cameras;
  overlay.apply("frames", "--frames", frames);
  overlay.apply("cameras", "--cameras", cameras);
  double noise_px = args.noise_px, pose_outliers = args.pose_outliers;
  double detection_outliers = args.detection_outliers, dropout = args.dropout;
  overlay.apply("noise_px", "--noise-px", noise_px);
  overlay.apply("pose_outliers", "--pose-outliers", pose_outliers);
  overlay.apply("detection_outliers", "--detection-outliers", detection_outliers);
  overlay.apply("dropout", "--dropout", dropout);
  int cloud_points = args.cloud_points;
  overlay.apply("cloud_points", "--cloud-points", cloud_points);
  overlay.finish();

  if (cmd->count("--object") > 0 || args.scenario_path.empty()) {
    scenario.object.kind = object_kind_from_name(object);
  }
  if (!args.size.empty()) {
    Vec3 size = Vec3::Zero();
    for (size_t i = 0; i < std::min<size_t>(3, args.size.size()); ++i) size[i] = args.size[i];
    scenario.object.size = size;
  }
  if (cmd->count("--frames") || args.scenario_path.empty()) scenario.frames = frames;
  if (cmd->count("--cameras") || args.scenario_path.empty()) scenario.cameras = cameras;
  if (cmd->count("--noise-px")) scenario.noise.detection_sigma_px = noise_px;
  if (cmd->count("--pose-outliers")) scenario.noise.pose_outlier_fraction = pose_outliers;
  if (cmd->count("--detection-outliers")) {
    scenario.noise.detection_outlier_fraction = detection_outliers;
  }
  if (cmd->count("--dropout")) scenario.noise.dropout_rate = dropout;
  if (cmd->count("--cloud-points")) scenario.cloud_points = cloud_points;
  if (cmd->count("--intent")) scenario.intent = intent_from_name(args.intent);
  if (cmd->count("--participant")) scenario.participant = args.participant;
  if (cmd->count("--object-id")) scenario.object_id = args.object_id;
  scenario.seed = args.seed;

  const SynthGrasp grasp = generate(scenario);
  const fs::path dir = prepare_out_dir(args.out);

  save_observation_json((dir / "observation.json").string(), grasp.observation);
  save_joints_json((dir / "gt_joints.json").string(), grasp.gt_joints);
  save_kinematic_json((dir / "hand.json").string(), grasp.gt_hand);
  save_skeleton_json((dir / "skeleton.json").string(), grasp.record.hands[0]);
  save_mesh_ply((dir / "object.ply").string(), *grasp.object_mesh);
  save_mesh_ply((dir / "contact.ply").string(), *grasp.object_mesh,
                &grasp.vertex_contact.values);
  save_cloud_ply((dir / "cloud.ply").string(), grasp.cloud, &grasp.cloud_contact.values);
  save_scenario_json((dir / "scenario.json").string(), scenario);

  manifest.outputs = {"observation.json", "gt_joints.json", "hand.json", "skeleton.json",
                      "object.ply", "contact.ply", "cloud.ply", "scenario.json"};
  manifest.config = {{"seed", scenario.seed},
                     {"object", object_kind_name(scenario.object.kind)},
                     {"frames", scenario.frames},
                     {"cameras", scenario.cameras},
                     {"noise_px", scenario.noise.detection_sigma_px},
                     {"pose_outliers", scenario.noise.pose_outlier_fraction},
                     {"detection_outliers", scenario.noise.detection_outlier_fraction},
                     {"dropout", scenario.noise.dropout_rate},
                     {"cloud_points", scenario.cloud_points}};
  write_manifest(dir, manifest);
  std::cout << "synth: " << grasp.cloud.size() << " points, "
            << grasp.observation.detections.size() << " detections -> " << dir.string()
            << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct ReconstructArgs {
  std::string in;
  std::string out;
  std::string config_path;
  uint64_t seed = 0;
  double inlier_px = 12.0;
  int iterations = 500;
  double huber_px = 5.0;
  bool no_rescue = false;
  bool final_refine = false;
};

int run_reconstruct(CLI::App* cmd, const ReconstructArgs& args) {
  Manifest manifest;
  manifest.command = "reconstruct";

  ConfigOverlay overlay(cmd, args.config_path);
  double inlier_px = args.inlier_px, huber_px = args.huber_px;
  int iterations = args.iterations;
  overlay.apply("inlier_px", "--inlier-px", inlier_px);
  overlay.apply("iterations", "--iterations", iterations);
  overlay.apply("huber_px", "--huber-px", huber_px);
  overlay.finish();

  const fs::path in_dir(args.in);
  const std::string obs_path =
      fs::is_directory(in_dir) ? (in_dir / "observation.json").string() : args.in;
  require_input(obs_path, manifest);
  const GraspObservation obs = load_observation_json(obs_path);

  RansacParams params;
  params.seed = args.seed;
  params.inlier_px = inlier_px;
  params.iterations = iterations;
  params.huber_delta_px = huber_px;
  params.refine_after_rescue = args.final_refine;

  ReconstructionResult result = ransac_reconstruct(obs, params);
  if (!args.no_rescue) result = second_pass_rescue(result, obs, params);

  double gt_error = -1.0;
  const fs::path gt_path = fs::is_directory(in_dir) ? in_dir / "gt_joints.json" : fs::path();
  if (!gt_path.empty() && fs::exists(gt_path)) {
    manifest.inputs[gt_path.string()] = content_digest(gt_path.string());
    const JointArray gt = load_joints_json(gt_path.string());
    double total = 0;
    for (int j = 0; j < 21; ++j) total += (result.joints[j] - gt[j]).norm();
    gt_error = total / 21.0;
  }

  const fs::path dir = prepare_out_dir(args.out);
  save_result_json((dir / "result.json").string(), result, gt_error);
  manifest.outputs = {"result.json"};
  manifest.config = {{"seed", params.seed},         {"inlier_px", params.inlier_px},
                     {"iterations", params.iterations}, {"huber_px", params.huber_delta_px},
                     {"rescue", !args.no_rescue},   {"final_refine", args.final_refine}};
  write_manifest(dir, manifest);

  std::cout << "reconstruct: " << result.inliers.size() << " inlier pairs, mean reprojection "
            << result.mean_reprojection_px << " px";
  if (gt_error >= 0) std::cout << ", mean error vs gt " << gt_error << " m";
  std::cout << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct NormalizeArgs {
  std::string mesh;
  std::string raw;
  std::string out;
};

int run_contact_normalize(const NormalizeArgs& args) {
  Manifest manifest;
  manifest.command = "contact-normalize";
  require_input(args.mesh, manifest);
  require_input(args.raw, manifest);

  const TriMesh mesh = load_mesh(args.mesh);
  const std::vector<double> raw = load_scalar_array_json(args.raw);
  if (raw.size() != mesh.vertices().size()) {
    throw Error("raw value count does not match the mesh vertex count");
  }
  const ContactMap map = normalize_thermal(raw);

  const fs::path dir = prepare_out_dir(args.out);
  save_mesh_ply((dir / "contact.ply").string(), mesh, &map.values);
  save_contact_json((dir / "contact.json").string(), map);
  manifest.outputs = {"contact.ply", "contact.json"};
  write_manifest(dir, manifest);
  std::cout << "contact-normalize: " << map.size() << " values -> " << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct FeaturesArgs {
  std::string cloud;
  std::vector<std::string> hands;
  std::string family = "skeleton";
  std::string out;
  std::string mesh;
  bool voxel = false;
  int64_t dropout_seed = -1;
};

int run_features(const FeaturesArgs& args) {
  Manifest manifest;
  manifest.command = "features";
  const FeatureFamily family = family_from_name(args.family);
  const std::vector<HandSkeleton> hands = load_hands(args.hands, manifest);
  std::vector<HandProxy> proxies;
  for (const HandSkeleton& h : hands) proxies.push_back(make_hand_proxy(h));

  const fs::path dir = prepare_out_dir(args.out);
  if (args.voxel) {
    if (args.mesh.empty()) throw Error("--voxel requires --mesh");
    require_input(args.mesh, manifest);
    const TriMesh mesh = load_mesh(args.mesh);
    const VoxelGrid grid = voxelize(mesh);
    const VoxelFeatureMatrix vf = voxel_features(grid, family, hands, proxies, mesh);
    std::ofstream bin(dir / "voxel_features.bin", std::ios::binary);
    for (int r = 0; r < vf.values.rows(); ++r) {
      for (int c = 0; c < vf.values.cols(); ++c) {
        const float f = static_cast<float>(vf.values(r, c));
        bin.write(reinterpret_cast<const char*>(&f), 4);
      }
    }
    json sidecar;
    sidecar["family"] = family_name(family);
    sidecar["rows"] = vf.values.rows();
    sidecar["cols"] = vf.values.cols();
    sidecar["voxel_ids"] = vf.linear_ids;
    sidecar["interior_filled"] = grid.interior_filled();
    std::ofstream side(dir / "voxel_features.json");
    side << sidecar.dump(2) << '\n';
    manifest.outputs = {"voxel_features.bin", "voxel_features.json"};
  } else {
    const CloudWithContact cloud = load_cloud_input(args.cloud, manifest);
    FeatureMatrix fm = compute_features(family, cloud.cloud, hands, proxies);
    if (args.dropout_seed >= 0) {
      fm = occlusion_dropout(fm, hands, static_cast<uint64_t>(args.dropout_seed));
    }
    save_features((dir / "features.bin").string(), (dir / "features.json").string(), fm);
    manifest.outputs = {"features.bin", "features.json"};
  }
  manifest.config = {{"family", args.family},
                     {"voxel", args.voxel},
                     {"dropout_seed", args.dropout_seed}};
  write_manifest(dir, manifest);
  std::cout << "features: " << args.family << " -> " << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct HeuristicArgs {
  std::string cloud;
  std::vector<std::string> hands;
  std::string out;
  std::string calibration;  // apply an existing fit instead of refitting
  double d_max = 0.01;
  int samples = 4700;
  uint64_t seed = 0;
};

int run_heuristic(const HeuristicArgs& args) {
  Manifest manifest;
  manifest.command = "heuristic";
  const std::vector<HandSkeleton> hands = load_hands(args.hands, manifest);
  std::vector<HandProxy> proxies;
  for (const HandSkeleton& h : hands) proxies.push_back(make_hand_proxy(h));
  const CloudWithContact cloud = load_cloud_input(args.cloud, manifest);

  const PsiField field = psi(cloud.cloud, proxies, args.d_max);

  Calibration calib;
  if (!args.calibration.empty()) {
    require_input(args.calibration, manifest);
    calib = load_calibration_json(args.calibration);
  } else {
    if (!cloud.contact) {
      throw Error("calibration requires ground-truth contact in the cloud, or --calibration");
    }
    calib = calibrate(field, ContactMap(*cloud.contact), args.samples, args.seed);
  }
  const ContactMap prediction = heuristic_predict(field, calib);

  const fs::path dir = prepare_out_dir(args.out);
  save_calibration_json((dir / "calibration.json").string(), calib, args.seed);
  save_cloud_ply((dir / "prediction.ply").string(), cloud.cloud, &prediction.values);
  {
    // psi can exceed 1, so it travels as a bare JSON array
    std::ofstream out(dir / "psi.json");
    out << json(field.values).dump(2) << '\n';
  }
  manifest.outputs = {"calibration.json", "prediction.ply", "psi.json"};
  manifest.config = {{"d_max", args.d_max}, {"samples", args.samples}, {"seed", args.seed}};
  write_manifest(dir, manifest);
  std::cout << "heuristic: slope " << calib.slope << ", intercept " << calib.intercept
            << " -> " << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string family = "skeleton";
  std::string out;
  double lr = 1e-3;
  int epochs = 100;
  int batch = 25;
  int rotations = 12;
  int patience = 10;
  double holdout = 0.1;
  uint64_t seed = 0;
};

std::vector<GraspSample> load_samples(const std::string& path, Manifest& manifest) {
  require_input(path, manifest);
  std::ifstream in(path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(path + ": malformed JSON: " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  std::vector<GraspSample> samples;
  for (const json& entry : j.at("samples")) {
    GraspSample sample;
    const std::string cloud_path = (base / entry.at("cloud").get<std::string>()).string();
    require_input(cloud_path, manifest);
    const CloudWithContact cloud = load_cloud_ply(cloud_path);
    if (!cloud.contact) throw Error(cloud_path + ": training clouds need a contact property");
    sample.points = cloud.cloud;
    sample.contact = ContactMap(*cloud.contact);
    for (const json& hand : entry.at("hands")) {
      const std::string hand_path = (base / hand.get<std::string>()).string();
      require_input(hand_path, manifest);
      sample.hands.push_back(load_skeleton_json(hand_path));
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) throw Error(path + ": no samples listed");
  return samples;
}

int run_train(const TrainArgs& args) {
  Manifest manifest;
  manifest.command = "train";
  const std::vector<GraspSample> samples = load_samples(args.data, manifest);
  const FeatureFamily family = family_from_name(args.family);

  TrainConfig config;
  config.learning_rate = args.lr;
  config.epochs = args.epochs;
  config.batch_size = args.batch;
  config.rotations = args.rotations;
  config.patience = args.patience;
  config.holdout = args.holdout;
  config.seed = args.seed;

  const TrainResult result = train_contact_model(samples, family, config);

  const fs::path dir = prepare_out_dir(args.out);
  manifest.config = {{"family", args.family}, {"lr", config.learning_rate},
                     {"epochs", config.epochs}, {"batch", config.batch_size},
                     {"rotations", config.rotations}, {"patience", config.patience},
                     {"holdout", config.holdout}, {"seed", config.seed}};
  save_model((dir / "model.bin").string(), result.model, manifest.config.dump());
  json report;
  report["train_loss"] = result.train_loss;
  report["holdout_loss"] = result.holdout_loss;
  report["best_epoch"] = result.best_epoch;
  report["aborted"] = result.aborted;
  std::ofstream rep(dir / "training.json");
  rep << report.dump(2) << '\n';
  manifest.outputs = {"model.bin", "training.json"};
  write_manifest(dir, manifest);

  std::cout << "train: " << result.train_loss.size() << " epochs, final loss "
            << (result.train_loss.empty() ? 0.0 : result.train_loss.back()) << " -> "
            << dir.string() << "\n";
  return result.aborted ? 1 : 0;
}

// -------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string cloud;
  std::vector<std::string> hands;
  std::string family = "skeleton";
  std::string out;
  int rotations = 12;
};

int run_predict(const PredictArgs& args) {
  Manifest manifest;
  manifest.command = "predict";
  require_input(args.model, manifest);
  const MlpModel model = load_model(args.model);
  const CloudWithContact cloud = load_cloud_input(args.cloud, manifest);
  GraspSample sample;
  sample.points = cloud.cloud;
  sample.contact = ContactMap(std::vector<double>(cloud.cloud.size(), 0.0));
  sample.hands = load_hands(args.hands, manifest);

  const PredictResult result =
      predict_contact(model, sample, family_from_name(args.family), args.rotations);

  const fs::path dir = prepare_out_dir(args.out);
  save_cloud_ply((dir / "prediction.ply").string(), cloud.cloud, &result.map.values);
  manifest.outputs = {"prediction.ply"};
  manifest.config = {{"family", args.family}, {"rotations", args.rotations}};
  write_manifest(dir, manifest);
  std::cout << "predict: " << result.map.size() << " points -> " << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string pred_joints;
  std::string gt_joints;
  std::string out;
  double lambda = 0.4;
};

int run_eval(const EvalArgs& args) {
  Manifest manifest;
  manifest.command = "eval";
  json report;

  if (!args.pred.empty() || !args.gt.empty()) {
    if (args.pred.empty() || args.gt.empty()) throw Error("--pred and --gt come together");
    require_input(args.pred, manifest);
    require_input(args.gt, manifest);
    auto load_values = [](const std::string& path) {
      if (path.size() > 4 && path.substr(path.size() - 4) == ".ply") {
        // mesh or cloud PLY; both carry a contact property
        try {
          const CloudWithContact c = load_cloud_ply(path);
          if (c.contact) return *c.contact;
        } catch (const Error&) {
        }
        const MeshWithContact m = load_mesh_with_contact(path);
        if (m.contact) return *m.contact;
        throw Error(path + ": no contact property found");
      }
      return load_scalar_array_json(path);
    };
    const ContactMap pred(load_values(args.pred));
    const ContactMap gt(load_values(args.gt));
    const AucReport auc = rebalanced_auc(pred, gt, args.lambda);
    report["auc_percent"] = auc.auc_percent;
    char line[64];
    std::snprintf(line, sizeof(line), "AuC %.2f\n", auc.auc_percent);
    std::cout << line;

    const fs::path dir = prepare_out_dir(args.out);
    std::ofstream curve(dir / "auc_curve.csv");
    curve << "threshold,accuracy\n";
    for (size_t i = 0; i < auc.thresholds.size(); ++i) {
      curve << auc.thresholds[i] << ',' << auc.accuracy[i] << '\n';
    }
    manifest.outputs.push_back("auc_curve.csv");
  }

  if (!args.pred_joints.empty() || !args.gt_joints.empty()) {
    if (args.pred_joints.empty() || args.gt_joints.empty()) {
      throw Error("--pred-joints and --gt-joints come together");
    }
    require_input(args.pred_joints, manifest);
    require_input(args.gt_joints, manifest);
    const JointAccuracy acc = joint_accuracy(load_joints_json(args.pred_joints),
                                             load_joints_json(args.gt_joints));
    report["mean_error_mm"] = acc.mean_error_mm;
    report["pck_auc_percent"] = acc.pck_auc_percent;
    std::cout << "joints: mean error " << acc.mean_error_mm << " mm, PCK-AUC "
              << acc.pck_auc_percent << "%\n";
  }

  if (report.empty()) throw Error("nothing to evaluate; pass --pred/--gt or joint files");

  const fs::path dir = prepare_out_dir(args.out);
  std::ofstream rep(dir / "report.json");
  rep << report.dump(2) << '\n';
  manifest.outputs.push_back("report.json");
  manifest.config = {{"lambda", args.lambda}};
  write_manifest(dir, manifest);
  return 0;
}

// -------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string grasps;
  std::string out;
  std::vector<int> active_parts;
  double cluster_threshold = 0.25;
};

int run_analyze(const AnalyzeArgs& args) {
  Manifest manifest;
  manifest.command = "analyze";
  require_input(args.grasps, manifest);
  const GraspSet grasps = load_graspset_json(args.grasps);
  if (grasps.empty()) throw Error("empty grasp set");
  const fs::path dir = prepare_out_dir(args.out);

  // per-part contact probabilities, overall and per intent
  {
    std::ofstream csv(dir / "contact_probabilities.csv");
    csv << "part,overall,use,handoff\n";
    const auto overall = hand_contact_probability(grasps, AssociationLevel::kPhalange);
    std::vector<double> use(overall.size(), 0.0), handoff(overall.size(), 0.0);
    try {
      use = hand_contact_probability(grasps, AssociationLevel::kPhalange, Intent::kUse);
    } catch (const Error&) {
    }
    try {
      handoff = hand_contact_probability(grasps, AssociationLevel::kPhalange, Intent::kHandoff);
    } catch (const Error&) {
    }
    for (size_t p = 0; p < overall.size(); ++p) {
      csv << p << ',' << overall[p] << ',' << use[p] << ',' << handoff[p] << '\n';
    }
    manifest.outputs.push_back("contact_probabilities.csv");
  }

  // contact areas per grasp
  {
    std::ofstream csv(dir / "contact_areas.csv");
    csv << "grasp,object,intent,fingertips_cm2,whole_hand_cm2\n";
    for (size_t g = 0; g < grasps.size(); ++g) {
      csv << g << ',' << grasps[g].object_id << ',' << intent_name(grasps[g].intent) << ','
          << contact_area_cm2(grasps[g], ContactRegion::kFingertips) << ','
          << contact_area_cm2(grasps[g], ContactRegion::kWholeHand) << '\n';
    }
    manifest.outputs.push_back("contact_areas.csv");
  }

  // grasp diversity per object+intent: joint spread and clustering
  {
    std::map<std::pair<std::string, Intent>, std::vector<int>> groups;
    for (int g = 0; g < static_cast<int>(grasps.size()); ++g) {
      groups[{grasps[g].object_id, grasps[g].intent}].push_back(g);
    }
    std::ofstream csv(dir / "diversity.csv");
    csv << "object,intent,grasps,mean_joint_stddev_m,clusters,mean_intra_cluster_l2\n";
    for (const auto& [key, ids] : groups) {
      if (ids.size() < 2) continue;
      std::vector<HandSkeleton> aligned;
      for (int g : ids) {
        for (const HandSkeleton& hand : grasps[g].hands) {
          aligned.push_back(normalize_and_align(hand));
        }
      }
      if (aligned.size() < 2) continue;
      const JointSpread spread = joint_stddev(aligned);
      const Clustering clusters = cluster_poses(aligned, args.cluster_threshold);
      const int n_clusters =
          *std::max_element(clusters.labels.begin(), clusters.labels.end()) + 1;
      csv << key.first << ',' << intent_name(key.second) << ',' << aligned.size() << ','
          << spread.mean << ',' << n_clusters << ',' << clusters.mean_intra_distance << '\n';
    }
    manifest.outputs.push_back("diversity.csv");
  }

  // active-area heatmaps for requested parts, per object
  for (int part : args.active_parts) {
    std::map<std::string, std::vector<int>> by_object;
    for (int g = 0; g < static_cast<int>(grasps.size()); ++g) {
      by_object[grasps[g].object_id].push_back(g);
    }
    for (const auto& [object_id, ids] : by_object) {
      GraspSet subset;
      for (int g : ids) subset.push_back(grasps[g]);
      const std::vector<double> prob = active_areas(subset, part);
      const std::string name = "active_" + object_id + "_part" + std::to_string(part) + ".ply";
      save_mesh_ply((dir / name).string(), *subset.front().mesh, &prob);
      manifest.outputs.push_back(name);
    }
  }

  // held-out splits
  {
    json splits;
    for (const auto kind : {SplitKind::kObject, SplitKind::kParticipant}) {
      const Split s = split(grasps, kind);
      const std::string name = kind == SplitKind::kObject ? "object" : "participant";
      splits[name]["train"] = s.train;
      splits[name]["test"] = s.test;
    }
    std::ofstream out(dir / "splits.json");
    out << splits.dump(2) << '\n';
    manifest.outputs.push_back("splits.json");
  }

  manifest.config = {{"cluster_threshold", args.cluster_threshold},
                     {"active_parts", args.active_parts}};
  write_manifest(dir, manifest);
  std::cout << "analyze: " << grasps.size() << " grasps -> " << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct FitHandArgs {
  std::string target;
  std::string out;
  double sigma = 10.0;
};

int run_fit_hand(const FitHandArgs& args) {
  Manifest manifest;
  manifest.command = "fit-hand";
  require_input(args.target, manifest);
  const HandSkeleton target = load_skeleton_json(args.target);
  const HandFitResult fit = fit_hand(target, args.sigma);

  const fs::path dir = prepare_out_dir(args.out);
  save_kinematic_json((dir / "fitted.json").string(), fit.hand);
  save_skeleton_json((dir / "fitted_skeleton.json").string(), fit.fitted);
  json report;
  report["objective"] = fit.objective;
  report["mean_joint_error_m"] = fit.joint_errors.mean();
  report["max_joint_error_m"] = fit.joint_errors.maxCoeff();
  std::vector<double> per_joint(fit.joint_errors.data(), fit.joint_errors.data() + 21);
  report["joint_errors_m"] = per_joint;
  report["iterations"] = fit.objective_trace.size();
  std::ofstream rep(dir / "fit_report.json");
  rep << report.dump(2) << '\n';
  manifest.outputs = {"fitted.json", "fitted_skeleton.json", "fit_report.json"};
  manifest.config = {{"sigma", args.sigma}};
  write_manifest(dir, manifest);
  std::cout << "fit-hand: mean joint error " << fit.joint_errors.mean() << " m -> "
            << dir.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------------

struct SweepArgs {
  std::string scenario;
  std::string axis = "noise";
  std::vector<double> values;
  int repeats = 1;
  std::string out;
};

int run_sweep(const SweepArgs& args) {
  Manifest manifest;
  manifest.command = "sweep";
  SynthScenario base;
  if (!args.scenario.empty()) {
    require_input(args.scenario, manifest);
    base = load_scenario_json(args.scenario);
  }
  const auto rows = sweep(base, args.axis, args.values, args.repeats);
  const fs::path dir = prepare_out_dir(args.out);
  std::ofstream csv(dir / "sweep.csv");
  csv << sweep_csv(rows, args.axis);
  manifest.outputs = {"sweep.csv"};
  manifest.config = {{"axis", args.axis}, {"values", args.values}, {"repeats", args.repeats}};
  write_manifest(dir, manifest);
  std::cout << "sweep: " << rows.size() << " cells -> " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp capture and contact modeling toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic grasp");
  synth_cmd->add_option("--seed", synth_args.seed, "random seed")->required();
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--scenario", synth_args.scenario_path, "scenario template JSON");
  synth_cmd->add_option("--config", synth_args.config_path, "config overlay JSON");
  synth_cmd->add_option("--object", synth_args.object, "sphere|box|cylinder|torus");
  synth_cmd->add_option("--size", synth_args.size, "object dimensions, meters");
  synth_cmd->add_option("--frames", synth_args.frames, "trajectory length");
  synth_cmd->add_option("--cameras", synth_args.cameras, "camera count");
  synth_cmd->add_option("--noise-px", synth_args.noise_px, "detection noise sigma");
  synth_cmd->add_option("--pose-outliers", synth_args.pose_outliers,
                        "fraction of frames with corrupted poses");
  synth_cmd->add_option("--detection-outliers", synth_args.detection_outliers,
                        "fraction of frames with scrambled detections");
  synth_cmd->add_option("--dropout", synth_args.dropout, "per-joint detection dropout rate");
  synth_cmd->add_option("--cloud-points", synth_args.cloud_points,
                        "surface samples (0 = by area)");
  synth_cmd->add_option("--intent", synth_args.intent, "use|handoff");
  synth_cmd->add_option("--participant", synth_args.participant, "participant id");
  synth_cmd->add_option("--object-id", synth_args.object_id, "object id override");

  ReconstructArgs rec_args;
  CLI::App* rec_cmd = app.add_subcommand("reconstruct", "multi-view 3D joint reconstruction");
  rec_cmd->add_option("--in", rec_args.in, "observation.json or a synth output directory")
      ->required();
  rec_cmd->add_option("--out", rec_args.out, "output directory")->required();
  rec_cmd->add_option("--config", rec_args.config_path, "config overlay JSON");
  rec_cmd->add_option("--seed", rec_args.seed, "random seed")->required();
  rec_cmd->add_option("--inlier-px", rec_args.inlier_px, "inlier threshold, px");
  rec_cmd->add_option("--iterations", rec_args.iterations, "hypothesis count");
  rec_cmd->add_option("--huber-px", rec_args.huber_px, "robust kernel width, px");
  rec_cmd->add_flag("--no-rescue", rec_args.no_rescue, "skip the second pass");
  rec_cmd->add_flag("--final-refine", rec_args.final_refine,
                    "re-optimize joints after the rescue pass");

  NormalizeArgs norm_args;
  CLI::App* norm_cmd = app.add_subcommand("contact-normalize", "sigmoid-normalize raw readings");
  norm_cmd->add_option("--mesh", norm_args.mesh, "object mesh (obj/ply)")->required();
  norm_cmd->add_option("--raw", norm_args.raw, "raw per-vertex values, JSON array")->required();
  norm_cmd->add_option("--out", norm_args.out, "output directory")->required();

  FeaturesArgs feat_args;
  CLI::App* feat_cmd = app.add_subcommand("features", "per-point hand-pose features");
  feat_cmd->add_option("--cloud", feat_args.cloud, "point cloud PLY");
  feat_cmd->add_option("--hands", feat_args.hands, "hand skeleton JSON files");
  feat_cmd->add_option("--family", feat_args.family,
                       "simple-joints|relative-joints|skeleton|mesh");
  feat_cmd->add_option("--out", feat_args.out, "output directory")->required();
  feat_cmd->add_option("--mesh", feat_args.mesh, "object mesh for voxel mode");
  feat_cmd->add_flag("--voxel", feat_args.voxel, "evaluate on the 64^3 voxel grid");
  feat_cmd->add_option("--dropout-seed", feat_args.dropout_seed,
                       "apply occlusion dropout with this seed");

  HeuristicArgs heur_args;
  CLI::App* heur_cmd = app.add_subcommand("heuristic", "proximity-field contact baseline");
  heur_cmd->add_option("--cloud", heur_args.cloud, "point cloud PLY (contact = ground truth)")
      ->required();
  heur_cmd->add_option("--hands", heur_args.hands, "hand skeleton JSON files")->required();
  heur_cmd->add_option("--out", heur_args.out, "output directory")->required();
  heur_cmd->add_option("--calibration", heur_args.calibration, "apply an existing calibration");
  heur_cmd->add_option("--d-max", heur_args.d_max, "proximity cutoff, meters");
  heur_cmd->add_option("--samples", heur_args.samples, "calibration sample count");
  heur_cmd->add_option("--seed", heur_args.seed, "calibration sampling seed");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train the contact classifier");
  train_cmd->add_option("--data", train_args.data, "samples.json index")->required();
  train_cmd->add_option("--family", train_args.family, "feature family");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--lr", train_args.lr, "learning rate (5e-4|1e-3|5e-3)");
  train_cmd->add_option("--epochs", train_args.epochs, "epoch budget");
  train_cmd->add_option("--batch", train_args.batch, "batch size");
  train_cmd->add_option("--rotations", train_args.rotations, "rotation copies per grasp");
  train_cmd->add_option("--patience", train_args.patience, "early-stopping patience");
  train_cmd->add_option("--holdout", train_args.holdout, "held-out grasp fraction");
  train_cmd->add_option("--seed", train_args.seed, "random seed")->required();

  PredictArgs pred_args;
  CLI::App* pred_cmd = app.add_subcommand("predict", "predict contact with a trained model");
  pred_cmd->add_option("--model", pred_args.model, "model checkpoint")->required();
  pred_cmd->add_option("--cloud", pred_args.cloud, "point cloud PLY")->required();
  pred_cmd->add_option("--hands", pred_args.hands, "hand skeleton JSON files")->required();
  pred_cmd->add_option("--family", pred_args.family, "feature family");
  pred_cmd->add_option("--out", pred_args.out, "output directory")->required();
  pred_cmd->add_option("--rotations", pred_args.rotations, "rotations averaged at evaluation");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate predictions");
  eval_cmd->add_option("--pred", eval_args.pred, "predicted contact (ply/json)");
  eval_cmd->add_option("--gt", eval_args.gt, "ground-truth contact (ply/json)");
  eval_cmd->add_option("--pred-joints", eval_args.pred_joints, "predicted joints JSON");
  eval_cmd->add_option("--gt-joints", eval_args.gt_joints, "ground-truth joints JSON");
  eval_cmd->add_option("--out", eval_args.out, "output directory")->required();
  eval_cmd->add_option("--lambda", eval_args.lambda, "rebalancing blend");

  AnalyzeArgs ana_args;
  CLI::App* ana_cmd = app.add_subcommand("analyze", "dataset analyses over a grasp set");
  ana_cmd->add_option("--grasps", ana_args.grasps, "graspset.json index")->required();
  ana_cmd->add_option("--out", ana_args.out, "output directory")->required();
  ana_cmd->add_option("--active-parts", ana_args.active_parts,
                      "phalange ids for active-area heatmaps");
  ana_cmd->add_option("--cluster-threshold", ana_args.cluster_threshold,
                      "agglomerative merge threshold");

  FitHandArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit-hand", "fit the kinematic hand to joints");
  fit_cmd->add_option("--target", fit_args.target, "target skeleton JSON")->required();
  fit_cmd->add_option("--out", fit_args.out, "output directory")->required();
  fit_cmd->add_option("--sigma", fit_args.sigma, "shape regularization");

  SweepArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "reconstruction error sweeps");
  sweep_cmd->add_option("--scenario", sweep_args.scenario, "base scenario JSON");
  sweep_cmd->add_option("--axis", sweep_args.axis, "noise|outliers|cameras")->required();
  sweep_cmd->add_option("--values", sweep_args.values, "axis values")->required();
  sweep_cmd->add_option("--repeats", sweep_args.repeats, "seeds per value");
  sweep_cmd->add_option("--out", sweep_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_cmd, synth_args);
    if (rec_cmd->parsed()) return run_reconstruct(rec_cmd, rec_args);
    if (norm_cmd->parsed()) return run_contact_normalize(norm_args);
    if (feat_cmd->parsed()) return run_features(feat_args);
    if (heur_cmd->parsed()) return run_heuristic(heur_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (pred_cmd->parsed()) return run_predict(pred_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (ana_cmd->parsed()) return run_analyze(ana_args);
    if (fit_cmd->parsed()) return run_fit_hand(fit_args);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
