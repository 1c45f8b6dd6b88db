#include "graspkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "graspkit/bvh.hpp"

namespace graspkit {

AucReport rebalanced_auc(const ContactMap& pred, const ContactMap& gt, double lambda,
                         int grid_points) {
  if (pred.size() != gt.size()) throw Error("rebalanced_auc: length mismatch");
  if (pred.size() == 0) throw Error("rebalanced_auc: empty inputs");
  if (grid_points < 2) throw Error("rebalanced_auc: grid too small");

  const std::vector<int> labels = discretize(gt);
  const std::array<double, kContactBins> weights = class_weights(labels, lambda);

  std::vector<double> abs_err(pred.size());
  double weight_total = 0;
  for (int i = 0; i < pred.size(); ++i) {
    abs_err[i] = std::abs(pred[i] - gt[i]);
    weight_total += weights[labels[i]];
  }

  AucReport report;
  report.thresholds.resize(grid_points);
  report.accuracy.resize(grid_points);
  for (int t = 0; t < grid_points; ++t) {
    const double tau = static_cast<double>(t) / (grid_points - 1);
    double correct = 0;
    for (int i = 0; i < pred.size(); ++i) {
      if (abs_err[i] <= tau) correct += weights[labels[i]];
    }
    report.thresholds[t] = tau;
    report.accuracy[t] = correct / weight_total;
  }

  double area = 0;
  for (int t = 1; t < grid_points; ++t) {
    area += 0.5 * (report.accuracy[t] + report.accuracy[t - 1]) *
            (report.thresholds[t] - report.thresholds[t - 1]);
  }
  report.auc_percent = 100.0 * area;
  return report;
}

JointAccuracy joint_accuracy(const JointArray& pred, const JointArray& gt) {
  constexpr double kCapM = 0.05;
  constexpr int kGrid = 101;

  std::array<double, 21> err{};
  double mean = 0;
  for (int j = 0; j < 21; ++j) {
    if (!pred[j].allFinite() || !gt[j].allFinite()) {
      throw Error("joint_accuracy: non-finite joints");
    }
    err[j] = (pred[j] - gt[j]).norm();
    mean += err[j];
  }
  mean /= 21.0;

  double area = 0;
  double prev_pck = 0;
  for (int t = 0; t < kGrid; ++t) {
    const double tau = kCapM * t / (kGrid - 1);
    int correct = 0;
    for (double e : err) {
      if (e <= tau) ++correct;
    }
    const double pck = correct / 21.0;
    if (t > 0) area += 0.5 * (pck + prev_pck) * (kCapM / (kGrid - 1));
    prev_pck = pck;
  }

  JointAccuracy out;
  out.mean_error_mm = mean * 1000.0;
  out.pck_auc_percent = 100.0 * area / kCapM;
  return out;
}

PenetrationStats penetration_stats(const std::vector<HandProxy>& hands, const TriMesh& object) {
  if (!object.is_watertight()) {
    throw Error("penetration_stats: object mesh must be watertight");
  }
  const MeshBvh bvh(object);

  std::vector<double> depths;
  int total = 0;
  for (const HandProxy& proxy : hands) {
    const ProxySamples samples = sample_proxy_surface(proxy);
    for (const Vec3& p : samples.points) {
      ++total;
      if (!bvh.contains(p)) continue;
      depths.push_back(bvh.nearest(p).distance);
    }
  }
  PenetrationStats stats;
  if (total == 0) return stats;
  stats.frequency_percent = 100.0 * depths.size() / total;
  if (depths.empty()) return stats;
  double sum = 0;
  for (double d : depths) sum += d;
  stats.mean_mm = 1000.0 * sum / depths.size();
  std::sort(depths.begin(), depths.end());
  const size_t mid = depths.size() / 2;
  stats.median_mm = 1000.0 * (depths.size() % 2 == 1
                                  ? depths[mid]
                                  : 0.5 * (depths[mid - 1] + depths[mid]));
  return stats;
}

}  // namespace graspkit
