#include <cmath>

#include "doctest.h"
#include "somn/calibration.hpp"
#include "somn/error.hpp"
#include "somn/rng.hpp"

using namespace somn;

namespace {

PredictionSet from_probability_rows(const std::vector<std::array<double, 5>>& rows,
                                    const std::vector<int>& truth) {
  PredictionSet p;
  const int n = static_cast<int>(rows.size());
  p.logits = Matrix(n, 5);
  p.probabilities = Matrix(n, 5);
  p.predicted.resize(static_cast<std::size_t>(n));
  p.truth.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 0; c < 5; ++c) {
      p.probabilities.at(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      p.logits.at(i, c) = std::log(std::max(1e-300, p.probabilities.at(i, c)));
      if (p.probabilities.at(i, c) > p.probabilities.at(i, best)) best = c;
    }
    p.predicted[static_cast<std::size_t>(i)] = static_cast<SleepStage>(best);
    p.truth[static_cast<std::size_t>(i)] = static_cast<SleepStage>(truth[static_cast<std::size_t>(i)]);
  }
  return p;
}

// Calibrated synthetic predictions: probabilities drawn from Dirichlet(1),
// truth sampled from exactly those probabilities, logits = log p.
PredictionSet calibrated_predictions(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, 5>> rows;
  std::vector<int> truth;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::array<double, 5> p{};
    double sum = 0.0;
    for (auto& v : p) {
      double u;
      do {
        u = rng.uniform();
      } while (u <= 0.0);
      v = -std::log(u);  // Exp(1) -> Dirichlet(1) after normalization
      sum += v;
    }
    for (auto& v : p) v /= sum;
    const double r = rng.uniform();
    double acc = 0.0;
    int label = 4;
    for (int c = 0; c < 5; ++c) {
      acc += p[static_cast<std::size_t>(c)];
      if (r < acc) {
        label = c;
        break;
      }
    }
    rows.push_back(p);
    truth.push_back(label);
  }
  return from_probability_rows(rows, truth);
}

// Brute-force ECE oracle: bins by interval membership, accumulates directly.
double ece_oracle(const PredictionSet& p, int bins) {
  const auto conf = confidence(p);
  double total = 0.0;
  for (int m = 0; m < bins; ++m) {
    const double lo = static_cast<double>(m) / bins;
    const double hi = static_cast<double>(m + 1) / bins;
    int count = 0, correct = 0;
    double conf_sum = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      const double c = conf[static_cast<std::size_t>(i)];
      const bool inside = m == 0 ? c <= hi : (c > lo && c <= hi);
      if (!inside) continue;
      ++count;
      conf_sum += c;
      if (p.predicted[static_cast<std::size_t>(i)] == p.truth[static_cast<std::size_t>(i)])
        ++correct;
    }
    if (count == 0) continue;
    total += static_cast<double>(count) / p.size() *
             std::abs(static_cast<double>(correct) / count - conf_sum / count);
  }
  return total;
}

}  // namespace

TEST_CASE("confidence is the per-row maximum probability") {
  const auto p = from_probability_rows(
      {{0.2, 0.2, 0.2, 0.2, 0.2}, {1.0, 0.0, 0.0, 0.0, 0.0}, {0.1, 0.1, 0.6, 0.1, 0.1}},
      {0, 0, 2});
  const auto conf = confidence(p);
  CHECK(conf[0] == doctest::Approx(0.2));
  CHECK(conf[1] == doctest::Approx(1.0));
  CHECK(conf[2] == doctest::Approx(0.6));
}

TEST_CASE("ECE hand case: 4 samples at confidence 0.9, 3 correct, M=10") {
  const auto p = from_probability_rows({{0.9, 0.1, 0.0, 0.0, 0.0},
                                        {0.9, 0.1, 0.0, 0.0, 0.0},
                                        {0.9, 0.1, 0.0, 0.0, 0.0},
                                        {0.9, 0.1, 0.0, 0.0, 0.0}},
                                       {0, 0, 0, 1});
  const CalibrationReport report = ece(p, 10);
  CHECK(std::abs(report.ece - 0.15) <= 1e-15);
  // All four samples land in the right-closed bin (0.8, 0.9].
  CHECK(report.bins[8].count == 4);
  CHECK(report.bins[8].accuracy == doctest::Approx(0.75));
  int total = 0;
  for (const auto& b : report.bins) total += b.count;
  CHECK(total == 4);
}

TEST_CASE("ECE is 0 when every bin's accuracy equals its confidence") {
  // 4 samples at confidence 0.75 with exactly 3 correct.
  const auto p = from_probability_rows({{0.75, 0.25, 0.0, 0.0, 0.0},
                                        {0.75, 0.25, 0.0, 0.0, 0.0},
                                        {0.75, 0.25, 0.0, 0.0, 0.0},
                                        {0.75, 0.25, 0.0, 0.0, 0.0}},
                                       {0, 0, 0, 1});
  CHECK(ece(p, 4).ece == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ECE equals the brute-force oracle on random predictions") {
  Rng rng(20);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::array<double, 5>> rows;
    std::vector<int> truth;
    for (int i = 0; i < 1000; ++i) {
      std::array<double, 5> p{};
      double sum = 0.0;
      for (auto& v : p) {
        v = rng.uniform() + 1e-6;
        sum += v;
      }
      for (auto& v : p) v /= sum;
      rows.push_back(p);
      truth.push_back(static_cast<int>(rng.uniform_int(0, 4)));
    }
    const auto p = from_probability_rows(rows, truth);
    CHECK(std::abs(ece(p, 15).ece - ece_oracle(p, 15)) <= 1e-12);
  }
}

TEST_CASE("bin counts always sum to N and ECE stays in [0,1]") {
  for (const int bins : {1, 7, 15, 50}) {
    const auto p = calibrated_predictions(512, 777);
    const CalibrationReport r = ece(p, bins);
    int total = 0;
    for (const auto& b : r.bins) total += b.count;
    CHECK(total == p.size());
    CHECK(r.ece >= 0.0);
    CHECK(r.ece <= 1.0);
  }
}

TEST_CASE("ECE of calibrated predictions shrinks with N") {
  const auto p = calibrated_predictions(100000, 31);
  CHECK(ece(p, 15).ece <= 0.02);
}

TEST_CASE("fit_temperature recovers unit temperature on calibrated logits") {
  const auto p = calibrated_predictions(20000, 5);
  const double t = fit_temperature(p);
  CHECK(t >= 0.9);
  CHECK(t <= 1.1);
}

TEST_CASE("fit_temperature recovers a 3x logit scale") {
  auto p = calibrated_predictions(20000, 6);
  for (auto& v : p.logits.v) v *= 3.0;
  const double t = fit_temperature(p);
  CHECK(t >= 2.7);
  CHECK(t <= 3.3);

  // Never worse than T = 1.
  CHECK(mean_nll(p, t) <= mean_nll(p, 1.0));
}

TEST_CASE("a single confidently-correct sample drives T to the lower bound") {
  const auto p = from_probability_rows({{0.6, 0.1, 0.1, 0.1, 0.1}}, {0});
  CHECK(fit_temperature(p) == 0.05);
}

TEST_CASE("apply_temperature") {
  const auto p = calibrated_predictions(200, 9);

  SUBCASE("T=1 leaves probabilities unchanged") {
    const auto q = apply_temperature(p, 1.0);
    for (std::size_t i = 0; i < p.probabilities.v.size(); ++i)
      CHECK(q.probabilities.v[i] == doctest::Approx(p.probabilities.v[i]).epsilon(1e-12));
  }
  SUBCASE("T -> large flattens rows toward uniform") {
    const auto q = apply_temperature(p, 1e6);
    for (std::size_t i = 0; i < q.probabilities.v.size(); ++i)
      CHECK(std::abs(q.probabilities.v[i] - 0.2) <= 1e-5);
  }
  SUBCASE("argmax is preserved for every row") {
    for (const double t : {0.07, 0.5, 2.0, 19.0}) {
      const auto q = apply_temperature(p, t);
      for (int i = 0; i < q.size(); ++i) {
        int best = 0;
        for (int c = 1; c < 5; ++c)
          if (q.probabilities.at(i, c) > q.probabilities.at(i, best)) best = c;
        CHECK(static_cast<SleepStage>(best) == q.predicted[static_cast<std::size_t>(i)]);
      }
    }
  }
  SUBCASE("non-positive temperatures are rejected") {
    CHECK_THROWS_AS(apply_temperature(p, 0.0), Error);
  }
}
