#include "graspkit/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graspkit/parallel.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

double psi_of_signed_distance(double s, double d_max) {
  if (s > d_max) return 0.0;
  if (s >= 0.0) return (d_max - s) / d_max;
  return 1.0 + (-s) / d_max;
}

}  // namespace

PsiField psi(const PointCloud& points, const HandProxy& proxy, double d_max) {
  return psi(points, std::vector<HandProxy>{proxy}, d_max);
}

PsiField psi(const PointCloud& points, const std::vector<HandProxy>& proxies, double d_max) {
  if (d_max <= 0) throw Error("psi: cutoff must be positive");
  if (proxies.empty()) throw Error("psi: at least one hand proxy required");
  PsiField field;
  field.d_max = d_max;
  field.values.resize(points.size());
  parallel_for(0, points.size(), [&](int i) {
    double s = std::numeric_limits<double>::infinity();
    for (const HandProxy& proxy : proxies) {
      s = std::min(s, proxy_signed_distance(proxy, points.points[i]));
    }
    field.values[i] = psi_of_signed_distance(s, d_max);
  });
  return field;
}

Calibration calibrate(const PsiField& field, const ContactMap& gt, int count, uint64_t seed) {
  if (field.size() != gt.size()) throw Error("calibrate: psi and contact length mismatch");
  if (field.size() < 2) throw Error("calibrate: needs at least two points");
  if (count < 2) throw Error("calibrate: sample count must be >= 2");

  std::vector<int> order(field.size());
  std::iota(order.begin(), order.end(), 0);
  const int n = std::min<int>(count, field.size());
  if (n < field.size()) {
    Rng rng(seed);
    rng.shuffle(order);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    const double x = field.values[order[k]];
    const double y = gt[order[k]];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  const double scale = std::max({sxx, 1.0});
  if (std::abs(denom) < 1e-12 * n * scale) {
    throw Error("calibrate: constant psi values, regression is degenerate");
  }
  Calibration calib;
  calib.slope = (n * sxy - sx * sy) / denom;
  calib.intercept = (sy - calib.slope * sx) / n;
  calib.samples = n;
  return calib;
}

ContactMap heuristic_predict(const PsiField& field, const Calibration& calibration) {
  if (calibration.samples < 2) throw Error("heuristic_predict: calibration not fitted");
  std::vector<double> out(field.values.size());
  for (size_t i = 0; i < field.values.size(); ++i) {
    out[i] = std::clamp(calibration.slope * field.values[i] + calibration.intercept, 0.0, 1.0);
  }
  return ContactMap(std::move(out));
}

}  // namespace graspkit
