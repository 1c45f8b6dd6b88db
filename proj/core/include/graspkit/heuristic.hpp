#pragma once

#include <vector>

#include "graspkit/contact.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

/// Proximity score per point: 0 beyond the cutoff, ramping to 1 at the proxy
/// surface, and growing past 1 with penetration depth.
struct PsiField {
  std::vector<double> values;
  double d_max = 0.01;

  int size() const { return static_cast<int>(values.size()); }
};

PsiField psi(const PointCloud& points, const HandProxy& proxy, double d_max = 0.01);
PsiField psi(const PointCloud& points, const std::vector<HandProxy>& proxies,
             double d_max = 0.01);

/// Least-squares line from psi to ground-truth contact.
struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;
  int samples = 0;
};

/// Ordinary least squares over `count` points sampled without replacement
/// (all points when count exceeds the field size). Deterministic per seed.
Calibration calibrate(const PsiField& field, const ContactMap& gt, int count, uint64_t seed);

/// clamp(slope * psi + intercept, 0, 1) per point.
ContactMap heuristic_predict(const PsiField& field, const Calibration& calibration);

}  // namespace graspkit
