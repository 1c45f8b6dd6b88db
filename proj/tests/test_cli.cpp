#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "graspkit/json_io.hpp"
#include "graspkit/mesh_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* env = std::getenv("GRASPKIT_CLI");
  REQUIRE_MESSAGE(env != nullptr, "GRASPKIT_CLI must point at the graspkit binary");
  return env;
}

struct RunResult {
  int exit_code = 0;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "graspkit_cli_log.txt";
  const std::string command = cli_path() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

fs::path workspace() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "graspkit_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth then reconstruct recovers the joints") {
  const fs::path ws = workspace();
  const fs::path d = ws / "d";
  const fs::path r = ws / "r";

  REQUIRE(run("synth --seed 7 --frames 20 --out " + d.string()).exit_code == 0);
  CHECK(fs::exists(d / "observation.json"));
  CHECK(fs::exists(d / "manifest.json"));
  CHECK(fs::exists(d / "config.json"));

  const std::string obs_before = slurp(d / "observation.json");
  REQUIRE(run("reconstruct --in " + d.string() + " --out " + r.string() + " --seed 1")
              .exit_code == 0);
  CHECK(slurp(d / "observation.json") == obs_before);  // inputs untouched

  const json result = json::parse(slurp(r / "result.json"));
  CHECK(result.at("mean_error_vs_gt_m").get<double>() < 1e-6);

  SUBCASE("reruns are byte-identical") {
    const fs::path r2 = ws / "r2";
    REQUIRE(run("reconstruct --in " + d.string() + " --out " + r2.string() + " --seed 1")
                .exit_code == 0);
    CHECK(slurp(r / "result.json") == slurp(r2 / "result.json"));
  }
}

TEST_CASE("eval of identical contact maps prints a perfect score") {
  const fs::path ws = workspace();
  const fs::path d = ws / "d";  // produced above; regenerate defensively
  if (!fs::exists(d / "contact.ply")) {
    REQUIRE(run("synth --seed 7 --frames 20 --out " + d.string()).exit_code == 0);
  }
  const RunResult result = run("eval --pred " + (d / "contact.ply").string() + " --gt " +
                               (d / "contact.ply").string() + " --out " + (ws / "e").string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("AuC 100.00") != std::string::npos);
  const json report = json::parse(slurp(ws / "e" / "report.json"));
  CHECK(report.at("auc_percent").get<double>() == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("usage and domain errors map to distinct exit codes") {
  const fs::path ws = workspace();
  const RunResult unknown = run("synth --seed 1 --out x --definitely-not-a-flag");
  CHECK(unknown.exit_code == 2);
  const RunResult no_sub = run("");
  CHECK(no_sub.exit_code == 2);
  const RunResult missing =
      run("reconstruct --in /nonexistent/dir --out " + (ws / "nope").string() + " --seed 1");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("/nonexistent/dir") != std::string::npos);

  // malformed JSON reports position
  const fs::path bad = ws / "bad.json";
  {
    std::ofstream out(bad);
    out << "{ broken\n";
  }
  const RunResult malformed =
      run("fit-hand --target " + bad.string() + " --out " + (ws / "nope2").string());
  CHECK(malformed.exit_code == 1);
  CHECK(malformed.output.find("line") != std::string::npos);
}

TEST_CASE("features, heuristic and contact-normalize round trips") {
  const fs::path ws = workspace();
  const fs::path d = ws / "feat_src";
  REQUIRE(run("synth --seed 9 --frames 4 --cloud-points 600 --out " + d.string()).exit_code ==
          0);

  SUBCASE("features") {
    const fs::path out = ws / "features";
    REQUIRE(run("features --cloud " + (d / "cloud.ply").string() + " --hands " +
                (d / "skeleton.json").string() + " --family skeleton --dropout-seed 5 --out " +
                out.string())
                .exit_code == 0);
    const graspkit::FeatureMatrix fm = graspkit::load_features(
        (out / "features.bin").string(), (out / "features.json").string());
    CHECK(fm.values.rows() == 600);
    CHECK(fm.values.cols() == 40);
    CHECK(fm.dropout.applied);
  }

  SUBCASE("voxel features") {
    const fs::path out = ws / "voxfeat";
    REQUIRE(run("features --voxel --mesh " + (d / "object.ply").string() + " --hands " +
                (d / "skeleton.json").string() + " --family mesh --out " + out.string())
                .exit_code == 0);
    const json sidecar = json::parse(slurp(out / "voxel_features.json"));
    CHECK(sidecar.at("cols").get<int>() == 24);  // 23 + occupancy
    CHECK(sidecar.at("interior_filled").get<bool>());
  }

  SUBCASE("heuristic") {
    const fs::path out = ws / "heur";
    const RunResult result =
        run("heuristic --cloud " + (d / "cloud.ply").string() + " --hands " +
            (d / "skeleton.json").string() + " --seed 3 --out " + out.string());
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(out / "calibration.json"));
    CHECK(fs::exists(out / "prediction.ply"));

    // prediction scores well against the ground truth it was calibrated on
    const RunResult eval = run("eval --pred " + (out / "prediction.ply").string() + " --gt " +
                               (d / "cloud.ply").string() + " --out " + (ws / "heval").string());
    CHECK(eval.exit_code == 0);
    const json report = json::parse(slurp(ws / "heval" / "report.json"));
    CHECK(report.at("auc_percent").get<double>() > 85.0);
  }

  SUBCASE("contact-normalize pins the extremes") {
    // raw readings indexed to the object mesh
    const graspkit::TriMesh mesh = graspkit::load_mesh((d / "object.ply").string());
    std::vector<double> raw(mesh.vertices().size());
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = 20.0 + (i % 17) * 0.75;
    const fs::path raw_path = ws / "raw.json";
    {
      std::ofstream out(raw_path);
      out << json(raw).dump() << '\n';
    }
    const fs::path out = ws / "norm";
    REQUIRE(run("contact-normalize --mesh " + (d / "object.ply").string() + " --raw " +
                raw_path.string() + " --out " + out.string())
                .exit_code == 0);
    const graspkit::ContactMap map =
        graspkit::load_contact_json((out / "contact.json").string());
    double lo = 1, hi = 0;
    for (double v : map.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(hi == doctest::Approx(0.95).epsilon(1e-6));
  }
}

TEST_CASE("train and predict on a tiny corpus") {
  const fs::path ws = workspace();
  json samples;
  samples["samples"] = json::array();
  for (int g = 0; g < 3; ++g) {
    const fs::path d = ws / ("train_src" + std::to_string(g));
    REQUIRE(run("synth --seed " + std::to_string(200 + g) + " --frames 2 --cloud-points 250" +
                " --out " + d.string())
                .exit_code == 0);
    json entry;
    entry["cloud"] = ("train_src" + std::to_string(g)) + "/cloud.ply";
    entry["hands"] = {("train_src" + std::to_string(g)) + "/skeleton.json"};
    samples["samples"].push_back(entry);
  }
  const fs::path index = ws / "samples.json";
  {
    std::ofstream out(index);
    out << samples.dump(2) << '\n';
  }

  const fs::path model_dir = ws / "model";
  REQUIRE(run("train --data " + index.string() +
              " --family skeleton --epochs 8 --rotations 2 --patience 0 --seed 4 --out " +
              model_dir.string())
              .exit_code == 0);
  CHECK(fs::exists(model_dir / "model.bin"));
  const json training = json::parse(slurp(model_dir / "training.json"));
  CHECK(training.at("train_loss").size() == 8);

  const fs::path pred_dir = ws / "pred";
  REQUIRE(run("predict --model " + (model_dir / "model.bin").string() + " --cloud " +
              (ws / "train_src0" / "cloud.ply").string() + " --hands " +
              (ws / "train_src0" / "skeleton.json").string() +
              " --family skeleton --rotations 2 --out " + pred_dir.string())
              .exit_code == 0);
  CHECK(fs::exists(pred_dir / "prediction.ply"));
}

TEST_CASE("analyze emits the declared reports") {
  const fs::path ws = workspace();
  json graspset;
  graspset["grasps"] = json::array();
  const char* objects[] = {"mug", "apple"};
  for (int g = 0; g < 4; ++g) {
    const std::string name = "ana_src" + std::to_string(g);
    const fs::path d = ws / name;
    REQUIRE(run("synth --seed " + std::to_string(300 + g) + " --frames 2 --object-id " +
                objects[g % 2] + " --participant " + std::to_string(g % 2 == 0 ? 5 : 7) +
                " --intent " + (g % 2 == 0 ? "use" : "handoff") + " --out " + d.string())
                .exit_code == 0);
    const graspkit::HandSkeleton hand =
        graspkit::load_skeleton_json((d / "skeleton.json").string());
    json entry;
    entry["object_id"] = objects[g % 2];
    entry["intent"] = g % 2 == 0 ? "use" : "handoff";
    entry["participant"] = g % 2 == 0 ? 5 : 7;
    entry["mesh"] = name + "/object.ply";
    entry["contact"] = name + "/contact.ply";
    entry["hands"] = json::array();
    json h;
    h["handedness"] = "right";
    h["joints"] = json::array();
    for (const auto& joint : hand.joints) {
      h["joints"].push_back({joint.x(), joint.y(), joint.z()});
    }
    entry["hands"].push_back(h);
    graspset["grasps"].push_back(entry);
  }
  const fs::path index = ws / "graspset.json";
  {
    std::ofstream out(index);
    out << graspset.dump(2) << '\n';
  }

  const fs::path out = ws / "analysis";
  REQUIRE(run("analyze --grasps " + index.string() + " --active-parts 7 --out " + out.string())
              .exit_code == 0);
  CHECK(fs::exists(out / "contact_probabilities.csv"));
  CHECK(fs::exists(out / "contact_areas.csv"));
  CHECK(fs::exists(out / "diversity.csv"));
  CHECK(fs::exists(out / "splits.json"));
  CHECK(fs::exists(out / "active_mug_part7.ply"));

  const json splits = json::parse(slurp(out / "splits.json"));
  // mug grasps and participant 5 are held out
  CHECK(splits.at("object").at("test").size() == 2);
  CHECK(splits.at("participant").at("test").size() == 2);
}

}  // TEST_SUITE
