#include <doctest.h>

#include <cmath>

#include "graspkit/contact.hpp"
#include "graspkit/rng.hpp"

using namespace graspkit;

namespace {

// Direct long-double evaluation of the annealed mean for one distribution,
// independent of the implementation's log-space path.
double annealed_mean_oracle(const std::array<double, 10>& p, double temperature) {
  long double norm = 0, mean = 0;
  for (int b = 0; b < 10; ++b) {
    if (p[b] <= 0) continue;
    const long double q = std::pow(static_cast<long double>(p[b]), 1.0L / temperature);
    norm += q;
    mean += q * (0.05L + 0.1L * b);
  }
  return static_cast<double>(mean / norm);
}

ContactDistribution single_row(const std::array<double, 10>& p) {
  ContactDistribution dist;
  dist.probs.resize(1, 10);
  for (int b = 0; b < 10; ++b) dist.probs(0, b) = p[b];
  return dist;
}

}  // namespace

TEST_SUITE("contact") {

TEST_CASE("thermal normalization pins the extremes") {
  Rng rng(2);
  std::vector<double> raw(500);
  for (double& v : raw) v = rng.uniform(15.0, 35.0);
  raw[17] = 40.0;  // warmest
  raw[0] = 10.0;   // coldest

  const ContactMap map = normalize_thermal(raw);
  double lo = 1, hi = 0;
  for (double v : map.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(lo == doctest::Approx(0.05).epsilon(1e-12));

  // midpoint maps to one half
  std::vector<double> tri = {0.0, 1.0, 2.0};
  const ContactMap mid = normalize_thermal(tri);
  CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-12));

  // strictly monotone in the raw values
  std::vector<std::pair<double, double>> pairs(map.size());
  for (int i = 0; i < map.size(); ++i) pairs[i] = {raw[i], map[i]};
  std::sort(pairs.begin(), pairs.end());
  for (size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].first > pairs[i - 1].first) CHECK(pairs[i].second > pairs[i - 1].second);
  }

  CHECK_THROWS_AS(normalize_thermal(std::vector<double>(10, 3.5)), Error);
}

TEST_CASE("thermal normalization is invariant to positive affine maps") {
  Rng rng(3);
  std::vector<double> raw(200);
  for (double& v : raw) v = rng.uniform(-5.0, 50.0);
  std::vector<double> scaled(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) scaled[i] = 3.7 * raw[i] + 11.0;

  const ContactMap a = normalize_thermal(raw);
  const ContactMap b = normalize_thermal(scaled);
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("binarize uses an inclusive threshold") {
  const ContactMap map(std::vector<double>{0.0, 0.39999, 0.4, 0.41, 1.0});
  const auto mask = binarize(map);
  CHECK(mask == std::vector<uint8_t>{0, 0, 1, 1, 1});

  const ContactMap zeros(std::vector<double>(64, 0.0));
  for (uint8_t m : binarize(zeros)) CHECK(m == 0);

  // contacted count is monotone non-increasing in tau
  Rng rng(4);
  std::vector<double> values(300);
  for (double& v : values) v = rng.uniform();
  const ContactMap random_map(values);
  int previous = random_map.size() + 1;
  for (double tau = 0.0; tau <= 1.0001; tau += 0.05) {
    const auto m = binarize(random_map, tau);
    int count = 0;
    for (uint8_t b : m) count += b;
    CHECK(count <= previous);
    previous = count;
  }
}

TEST_CASE("discretize maps to ten bins with clamping") {
  const ContactMap map(std::vector<double>{0.05, 0.95, 1.0, 0.0, 0.1, 0.09999});
  const std::vector<int> labels = discretize(map);
  CHECK(labels == std::vector<int>{0, 9, 9, 0, 1, 0});

  // decode of a one-hot at the label recovers the bin center
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const double v = rng.uniform();
    const int bin = discretize(ContactMap({v}))[0];
    std::array<double, 10> onehot{};
    onehot[bin] = 1.0;
    const ContactMap decoded = decode_annealed_mean(single_row(onehot));
    CHECK(decoded[0] == doctest::Approx(bin_center(bin)).epsilon(1e-12));
    CHECK(std::abs(decoded[0] - v) <= 0.05 + 1e-12);
  }
}

TEST_CASE("class weights") {
  SUBCASE("uniform labels give unit weights") {
    std::vector<int> labels;
    for (int b = 0; b < 10; ++b) labels.insert(labels.end(), 7, b);
    const auto weights = class_weights(labels);
    for (double w : weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single occupied bin") {
    const std::vector<int> labels(100, 4);
    const auto weights = class_weights(labels);
    // unnormalized: occupied (0.6 + 0.04)^-1, empty (0.04)^-1; the
    // normalizer is p.w summed = the occupied bin's own term
    CHECK(weights[4] == doctest::Approx(1.0).epsilon(1e-12));
    const double expected_empty = (1.0 / 0.04) / (1.0 / 0.64);
    for (int b = 0; b < 10; ++b) {
      if (b != 4) CHECK(weights[b] == doctest::Approx(expected_empty).epsilon(1e-12));
    }
  }
  SUBCASE("normalization holds for random label sets") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> labels(1 + rng.uniform_int(500));
      for (int& l : labels) l = rng.uniform_int(10);
      const auto weights = class_weights(labels);
      std::array<double, 10> freq{};
      for (int l : labels) freq[l] += 1.0 / labels.size();
      double total = 0;
      for (int b = 0; b < 10; ++b) total += freq[b] * weights[b];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      for (double w : weights) CHECK(std::isfinite(w));
    }
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(class_weights({}), Error);
  }
}

TEST_CASE("annealed mean decoding") {
  SUBCASE("one-hot returns the bin center exactly") {
    std::array<double, 10> p{};
    p[3] = 1.0;
    CHECK(decode_annealed_mean(single_row(p))[0] == doctest::Approx(0.35).epsilon(1e-15));
  }
  SUBCASE("uniform distribution decodes to one half at any temperature") {
    std::array<double, 10> p{};
    p.fill(0.1);
    for (double t : {1e-3, 0.1, 0.5, 1.0}) {
      CHECK(decode_annealed_mean(single_row(p), t)[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("two-bin distribution matches the direct formula") {
    std::array<double, 10> p{};
    p[2] = 0.6;
    p[7] = 0.4;
    const double oracle = annealed_mean_oracle(p, 0.1);
    CHECK(decode_annealed_mean(single_row(p), 0.1)[0] == doctest::Approx(oracle).epsilon(1e-12));
    // annealing sharpens toward the mode: between the mode center and the
    // plain expectation (0.45)
    CHECK(oracle > 0.25);
    CHECK(oracle < 0.27);
  }
  SUBCASE("temperature limits") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      std::array<double, 10> p{};
      double total = 0;
      for (double& v : p) total += (v = rng.uniform(0.01, 1.0));
      for (double& v : p) v /= total;
      // a clear mode margin: near-ties collapse only in the exact limit
      {
        int m = 0;
        for (int b = 1; b < 10; ++b) {
          if (p[b] > p[m]) m = b;
        }
        p[m] *= 1.5;
        double t2 = 0;
        for (double v : p) t2 += v;
        for (double& v : p) v /= t2;
      }

      int mode = 0;
      double expectation = 0;
      for (int b = 0; b < 10; ++b) {
        if (p[b] > p[mode]) mode = b;
        expectation += p[b] * bin_center(b);
      }
      // T -> 0: the mode's bin center; T -> 1: the plain expectation
      const double cold = decode_annealed_mean(single_row(p), 1e-3)[0];
      const double warm = decode_annealed_mean(single_row(p), 1.0)[0];
      CHECK(std::abs(cold - bin_center(mode)) < 1e-3);
      CHECK(std::abs(warm - expectation) < 1e-12);
    }
  }
  SUBCASE("all-zero vector is an error") {
    std::array<double, 10> p{};
    CHECK_THROWS_AS(decode_annealed_mean(single_row(p)), Error);
  }
  SUBCASE("zero bins are excluded, not floored") {
    std::array<double, 10> p{};
    p[0] = 0.5;
    p[9] = 0.5;
    const double v = decode_annealed_mean(single_row(p), 0.1)[0];
    CHECK(v == doctest::Approx(0.5).epsilon(1e-12));  // symmetric survivors
  }
}

TEST_CASE("contact map validation") {
  CHECK_THROWS_AS(ContactMap(std::vector<double>{-0.1}), Error);
  CHECK_THROWS_AS(ContactMap(std::vector<double>{1.5}), Error);

  ContactDistribution bad;
  bad.probs.resize(1, 10);
  bad.probs.setZero();
  bad.probs(0, 0) = 0.5;  // does not sum to 1
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
