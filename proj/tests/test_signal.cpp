#include <cmath>
#include <numbers>

#include "doctest.h"
#include "somn/error.hpp"
#include "somn/rng.hpp"
#include "somn/signal.hpp"

using namespace somn;

TEST_CASE("quantile_scale maps the 1..5 ramp to [-1,-0.5,0,0.5,1]") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto y = quantile_scale(x);
  const std::vector<double> expect{-1.0, -0.5, 0.0, 0.5, 1.0};
  REQUIRE(y.size() == expect.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("quantile_scale output has median 0 and IQR 1") {
  Rng rng(7);
  std::vector<double> x(501);
  for (auto& v : x) v = 3.0 + 10.0 * rng.gaussian();
  const auto y = quantile_scale(x);

  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::abs(quantile_sorted(sorted, 0.5)) < 1e-9);
  CHECK(std::abs(quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25) - 1.0) < 1e-9);
}

TEST_CASE("quantile_scale is idempotent") {
  Rng rng(11);
  std::vector<double> x(200);
  for (auto& v : x) v = rng.uniform(-5.0, 40.0);
  const auto once = quantile_scale(x);
  const auto twice = quantile_scale(once);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once[i] - twice[i]) < 1e-9);
}

TEST_CASE("quantile_scale is invariant to positive affine transforms") {
  Rng rng(13);
  std::vector<double> x(150), ax(150);
  const double a = 3.7, b = -12.5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.gaussian();
    ax[i] = a * x[i] + b;
  }
  const auto y1 = quantile_scale(x);
  const auto y2 = quantile_scale(ax);
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-9);
}

TEST_CASE("quantile_scale error cases") {
  CHECK_THROWS_AS(quantile_scale(std::vector<double>{7, 7, 7, 7}), Error);
  CHECK_THROWS_AS(quantile_scale(std::vector<double>{1, 2, 3}), Error);
  try {
    quantile_scale(std::vector<double>{7, 7, 7, 7});
  } catch (const Error& e) {
    CHECK(e.code() == errc::constant_signal);
  }
  try {
    quantile_scale(std::vector<double>{1, 2, 3});
  } catch (const Error& e) {
    CHECK(e.code() == errc::too_short);
  }
}

TEST_CASE("resample at equal rates returns the signal unchanged") {
  Rng rng(3);
  std::vector<double> x(777);
  for (auto& v : x) v = rng.gaussian();
  const auto y = resample(x, 128.0, 128.0);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("resample halves the length from 200 Hz to 100 Hz") {
  std::vector<double> x(600, 1.0);
  CHECK(resample(x, 200.0, 100.0).size() == 300);
}

TEST_CASE("resampled 2 Hz sine matches the analytic sine away from edges") {
  const double src = 200.0, dst = 100.0;
  const int n = 800;  // 4 s
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * 2.0 * i / src);
  const auto y = resample(x, src, dst);
  REQUIRE(y.size() == 400);

  const int skip = static_cast<int>(0.1 * dst);
  double max_err = 0.0;
  for (int i = skip; i < static_cast<int>(y.size()) - skip; ++i) {
    const double want = std::sin(2.0 * std::numbers::pi * 2.0 * i / dst);
    max_err = std::max(max_err, std::abs(y[static_cast<std::size_t>(i)] - want));
  }
  CHECK(max_err <= 1e-2);
}

TEST_CASE("resample rejects non-positive rates") {
  std::vector<double> x(10, 0.0);
  CHECK_THROWS_AS(resample(x, 0.0, 100.0), Error);
  CHECK_THROWS_AS(resample(x, 100.0, -1.0), Error);
}

namespace {

Recording make_recording(std::size_t samples, std::vector<SleepStage> labels) {
  Recording rec;
  rec.sample_rate_hz = 100.0;
  rec.subject_id = "subj";
  rec.samples.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) rec.samples[i] = static_cast<double>(i);
  rec.stage_labels = std::move(labels);
  return rec;
}

}  // namespace

TEST_CASE("epoch_split pairs epochs with labels and drops the remainder") {
  using S = SleepStage;
  SUBCASE("exact division") {
    const auto set = epoch_split(make_recording(9000, {S::W, S::N1, S::N2}));
    REQUIRE(set.size() == 3);
    CHECK(set.epochs[0].label == S::W);
    CHECK(set.epochs[2].label == S::N2);
    CHECK(set.epochs[0].values[0] == 0.0);
    CHECK(set.epochs[1].values[0] == 3000.0);
  }
  SUBCASE("trailing partial segment dropped") {
    CHECK(epoch_split(make_recording(9500, {S::W, S::N1, S::N2})).size() == 3);
  }
  SUBCASE("label-limited") {
    CHECK(epoch_split(make_recording(9000, {S::W, S::N1})).size() == 2);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(epoch_split(make_recording(2999, {S::W})), Error);
  }
  SUBCASE("count is min(floor(len/3000), labels) for arbitrary sizes") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const auto samples = static_cast<std::size_t>(rng.uniform_int(3000, 40000));
      const auto nlabels = static_cast<std::size_t>(rng.uniform_int(0, 12));
      const auto set = epoch_split(make_recording(samples, std::vector<SleepStage>(nlabels, S::N2)));
      CHECK(set.size() == std::min(samples / 3000, nlabels));
    }
  }
}

TEST_CASE("gaussian noise injection") {
  EpochSet set;
  for (int e = 0; e < 4; ++e) {
    Epoch ep;
    ep.label = SleepStage::N2;
    ep.values.assign(3000, 0.5);
    set.epochs.push_back(ep);
  }

  SUBCASE("scale 0 returns identical epochs") {
    const auto out = add_gaussian_noise(set, 0.0, 1.0, 99);
    for (std::size_t e = 0; e < set.size(); ++e)
      for (std::size_t i = 0; i < 3000; ++i)
        CHECK(out.epochs[e].values[i] == set.epochs[e].values[i]);
  }
  SUBCASE("same seed is bit-identical; labels and lengths preserved") {
    const auto a = add_gaussian_noise(set, 0.4, 2.0, 1234);
    const auto b = add_gaussian_noise(set, 0.4, 2.0, 1234);
    REQUIRE(a.size() == set.size());
    for (std::size_t e = 0; e < a.size(); ++e) {
      CHECK(a.epochs[e].label == set.epochs[e].label);
      REQUIRE(a.epochs[e].values.size() == 3000);
      for (std::size_t i = 0; i < 3000; ++i) CHECK(a.epochs[e].values[i] == b.epochs[e].values[i]);
    }
  }
  SUBCASE("empirical noise std matches scale * ref_std") {
    EpochSet big;
    Epoch ep;
    ep.values.assign(kEpochSamples, 0.0);
    for (int e = 0; e < 334; ++e) big.epochs.push_back(ep);  // > 1e6 samples
    const auto noisy = add_gaussian_noise(big, 0.3, 1.0, 5);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& eph : noisy.epochs)
      for (double v : eph.values) {
        sum += v;
        sum2 += v * v;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    const double std = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
    CHECK(std >= 0.297);
    CHECK(std <= 0.303);
  }
}
