#include "somn/interpret.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "somn/error.hpp"
#include "somn/layers.hpp"
#include "somn/rng.hpp"
#include "somn/stager.hpp"

namespace somn {

SaliencyMap saliency(const ModelGraph& model, const Epoch& epoch, SleepStage target,
                     bool post_softmax) {
  const int n = static_cast<int>(epoch.values.size());
  Tensor x(1, 1, n);
  std::copy(epoch.values.begin(), epoch.values.end(), x.row(0, 0));

  const Tensor logits = model.logits(x);
  require(logits.channels == kNumStages && logits.length == 1, errc::shape_mismatch,
          "model does not produce 5 logits");

  Tensor upstream(1, kNumStages, 1);
  const int t = static_cast<int>(target);
  if (!post_softmax) {
    upstream.at(0, t, 0) = 1.0;
  } else {
    // d p_t / d z_c = p_t * (1{c==t} - p_c)
    const Matrix probs = softmax_rows(logits);
    for (int c = 0; c < kNumStages; ++c)
      upstream.at(0, c, 0) = probs.at(0, t) * ((c == t ? 1.0 : 0.0) - probs.at(0, c));
  }

  const Tensor grad = model.input_gradient(x, upstream);
  SaliencyMap map;
  map.target = target;
  map.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) map.values[static_cast<std::size_t>(i)] = std::abs(grad.at(0, 0, i));
  return map;
}

std::vector<Region> top_k_regions(const SaliencyMap& map, int k, int window) {
  const int n = static_cast<int>(map.values.size());
  require(k >= 1 && window >= 1, errc::invalid_config, "k and window must be >= 1");
  require(static_cast<std::int64_t>(k) * window <= n, errc::insufficient_length,
          "k * window exceeds the signal length");

  // Sliding window sums at every start position.
  const int starts = n - window + 1;
  std::vector<double> sums(static_cast<std::size_t>(starts));
  double acc = 0.0;
  for (int i = 0; i < window; ++i) acc += map.values[static_cast<std::size_t>(i)];
  sums[0] = acc;
  for (int s = 1; s < starts; ++s) {
    acc += map.values[static_cast<std::size_t>(s + window - 1)] -
           map.values[static_cast<std::size_t>(s - 1)];
    sums[static_cast<std::size_t>(s)] = acc;
  }

  std::vector<int> order(static_cast<std::size_t>(starts));
  for (int s = 0; s < starts; ++s) order[static_cast<std::size_t>(s)] = s;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (sums[static_cast<std::size_t>(a)] != sums[static_cast<std::size_t>(b)])
      return sums[static_cast<std::size_t>(a)] > sums[static_cast<std::size_t>(b)];
    return a < b;
  });

  std::vector<Region> chosen;
  for (const int s : order) {
    if (static_cast<int>(chosen.size()) == k) break;
    bool clash = false;
    for (const auto& r : chosen) {
      if (s < r.end && r.start < s + window) {
        clash = true;
        break;
      }
    }
    if (!clash) chosen.push_back({s, s + window});
  }
  require(static_cast<int>(chosen.size()) == k, errc::insufficient_length,
          "could not place k disjoint windows");
  std::sort(chosen.begin(), chosen.end(),
            [](const Region& a, const Region& b) { return a.start < b.start; });
  return chosen;
}

double saliency_overlap(std::span<const Region> regions,
                        std::span<const PlantedOccurrence> occurrences) {
  std::int64_t total = 0, covered = 0;
  for (const auto& occ : occurrences) {
    total += occ.length;
    for (const auto& r : regions) {
      const int lo = std::max(occ.offset, r.start);
      const int hi = std::min(occ.offset + occ.length, r.end);
      if (hi > lo) covered += hi - lo;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(covered) / static_cast<double>(total);
}

double saliency_stability(const ModelGraph& model, const Epoch& epoch, double scale,
                          double ref_std, std::uint64_t seed) {
  require(scale >= 0.0, errc::invalid_config, "noise scale must be >= 0");

  EpochSet single;
  single.epochs.push_back(epoch);
  const SleepStage target = predict(model, single).predicted.front();

  const SaliencyMap clean = saliency(model, epoch, target);
  const EpochSet noisy_set = add_gaussian_noise(single, scale, ref_std, seed);
  const SaliencyMap noisy = saliency(model, noisy_set.epochs.front(), target);

  const std::size_t n = clean.values.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += clean.values[i];
    mean_b += noisy.values[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = clean.values[i] - mean_a;
    const double db = noisy.values[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  require(var_a > 0.0 && var_b > 0.0, errc::degenerate_saliency,
          "saliency map is constant; correlation undefined");
  return cov / std::sqrt(var_a * var_b);
}

const char* to_string(FreqBand band) {
  switch (band) {
    case FreqBand::delta: return "delta";
    case FreqBand::theta: return "theta";
    case FreqBand::alpha: return "alpha";
    case FreqBand::fast: return "fast";
  }
  return "?";
}

namespace {

FreqBand band_of(double freq_hz) {
  if (freq_hz < 4.0) return FreqBand::delta;
  if (freq_hz < 8.0) return FreqBand::theta;
  if (freq_hz <= 12.0) return FreqBand::alpha;
  return FreqBand::fast;
}

// FFTW plan creation is not thread-safe; execution is.
std::mutex g_fftw_mutex;

}  // namespace

FilterSpectrum filter_spectrum(std::span<const double> filter, double fs) {
  require(filter.size() >= 8, errc::too_short, "filter must have at least 8 samples");
  require(fs > 0.0, errc::invalid_rate, "sampling rate must be positive");
  bool nonzero = false;
  for (double v : filter) {
    if (v != 0.0) {
      nonzero = true;
      break;
    }
  }
  require(nonzero, errc::zero_filter, "spectrum of an all-zero filter");

  std::size_t padded = 256;
  while (padded < filter.size()) padded *= 2;
  const int n = static_cast<int>(padded);

  std::vector<double> in(padded, 0.0);
  std::copy(filter.begin(), filter.end(), in.begin());
  std::vector<fftw_complex> out(padded / 2 + 1);

  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  FilterSpectrum spec;
  const std::size_t bins = padded / 2 + 1;
  spec.freqs.resize(bins);
  spec.power.resize(bins);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    spec.freqs[k] = fs * static_cast<double>(k) / static_cast<double>(padded);
    spec.power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    if (spec.power[k] > spec.power[peak]) peak = k;
  }
  spec.peak_freq = spec.freqs[peak];
  spec.dominant_band = band_of(spec.peak_freq);
  return spec;
}

}  // namespace somn
