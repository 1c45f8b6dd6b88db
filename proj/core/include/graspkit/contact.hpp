#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "graspkit/types.hpp"

namespace graspkit {

constexpr int kContactBins = 10;
constexpr double kContactThreshold = 0.4;

/// Per-vertex (or per-point) contact intensity in [0, 1].
struct ContactMap {
  std::vector<double> values;

  ContactMap() = default;
  explicit ContactMap(std::vector<double> v);

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
};

/// Per-point probabilities over the 10 contact bins.
struct ContactDistribution {
  Eigen::MatrixXd probs;  // rows x 10

  int size() const { return static_cast<int>(probs.rows()); }
  void validate() const;
};

inline double bin_center(int bin) { return 0.05 + 0.1 * bin; }

/// Logistic remap of raw thermal readings pinning the warmest reading to
/// 0.95 and the coldest to 0.05. Throws on constant input.
ContactMap normalize_thermal(const std::vector<double>& raw);

/// value >= tau counts as contact.
std::vector<uint8_t> binarize(const ContactMap& map, double tau = kContactThreshold);

/// Bin label min(floor(10 v), 9) per point.
std::vector<int> discretize(const ContactMap& map);

/// Inverse-frequency class weights blended with a uniform floor
/// (weight_b ~ ((1-lambda) p_b + lambda/10)^-1), normalized so that
/// sum_b p_b w_b = 1.
std::array<double, kContactBins> class_weights(const std::vector<int>& labels,
                                               double lambda = 0.4);

/// Temperature-sharpened expectation over bin centers
/// (q_b ~ p_b^(1/T), zero-probability bins excluded).
ContactMap decode_annealed_mean(const ContactDistribution& dist, double temperature = 0.1);

}  // namespace graspkit
