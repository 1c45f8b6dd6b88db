#include "graspkit/contact.hpp"

#include <algorithm>
#include <cmath>

namespace graspkit {

ContactMap::ContactMap(std::vector<double> v) : values(std::move(v)) {
  for (double x : values) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error("ContactMap: value outside [0,1]");
  }
}

void ContactDistribution::validate() const {
  if (probs.cols() != kContactBins) throw Error("ContactDistribution: expected 10 bins");
  for (int i = 0; i < probs.rows(); ++i) {
    double sum = 0;
    for (int b = 0; b < kContactBins; ++b) {
      const double p = probs(i, b);
      if (p < 0) throw Error("ContactDistribution: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("ContactDistribution: row does not sum to 1");
  }
}

ContactMap normalize_thermal(const std::vector<double>& raw) {
  if (raw.empty()) throw Error("normalize_thermal: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) {
    throw Error("normalize_thermal: constant input, sigmoid is underdetermined");
  }
  // Solve 1/(1+exp(-a(v-b))) for max -> 0.95 and min -> 0.05:
  // b is the midpoint and a = 2 logit(0.95) / range.
  const double b = 0.5 * (lo + hi);
  const double a = 2.0 * std::log(0.95 / 0.05) / (hi - lo);
  std::vector<double> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-a * (raw[i] - b)));
  }
  return ContactMap(std::move(out));
}

std::vector<uint8_t> binarize(const ContactMap& map, double tau) {
  std::vector<uint8_t> mask(map.values.size());
  for (size_t i = 0; i < map.values.size(); ++i) mask[i] = map.values[i] >= tau ? 1 : 0;
  return mask;
}

std::vector<int> discretize(const ContactMap& map) {
  std::vector<int> labels(map.values.size());
  for (size_t i = 0; i < map.values.size(); ++i) {
    labels[i] = std::min(static_cast<int>(std::floor(10.0 * map.values[i])), kContactBins - 1);
  }
  return labels;
}

std::array<double, kContactBins> class_weights(const std::vector<int>& labels, double lambda) {
  if (labels.empty()) throw Error("class_weights: empty labels");
  std::array<double, kContactBins> freq{};
  for (int label : labels) {
    if (label < 0 || label >= kContactBins) throw Error("class_weights: label out of range");
    freq[label] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(labels.size());

  std::array<double, kContactBins> weights{};
  double z = 0;
  for (int b = 0; b < kContactBins; ++b) {
    weights[b] = 1.0 / ((1.0 - lambda) * freq[b] + lambda / kContactBins);
    z += freq[b] * weights[b];
  }
  for (double& w : weights) w /= z;
  return weights;
}

ContactMap decode_annealed_mean(const ContactDistribution& dist, double temperature) {
  if (temperature <= 0) throw Error("decode_annealed_mean: temperature must be positive");
  std::vector<double> out(dist.size());
  for (int i = 0; i < dist.size(); ++i) {
    // log-space softening for numerical stability at small T
    double max_log = -std::numeric_limits<double>::infinity();
    std::array<double, kContactBins> logp{};
    bool any = false;
    for (int b = 0; b < kContactBins; ++b) {
      const double p = dist.probs(i, b);
      if (p <= 0) {
        logp[b] = -std::numeric_limits<double>::infinity();
        continue;
      }
      logp[b] = std::log(p) / temperature;
      max_log = std::max(max_log, logp[b]);
      any = true;
    }
    if (!any) throw Error("decode_annealed_mean: all-zero probability vector");
    double norm = 0, mean = 0;
    for (int b = 0; b < kContactBins; ++b) {
      if (!std::isfinite(logp[b])) continue;
      const double q = std::exp(logp[b] - max_log);
      norm += q;
      mean += q * bin_center(b);
    }
    out[i] = std::clamp(mean / norm, 0.0, 1.0);
  }
  return ContactMap(std::move(out));
}

}  // namespace graspkit
