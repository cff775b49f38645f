#include "somn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "somn/error.hpp"
#include "somn/rng.hpp"

namespace somn {

const char* to_string(SleepStage stage) {
  switch (stage) {
    case SleepStage::W: return "W";
    case SleepStage::N1: return "N1";
    case SleepStage::N2: return "N2";
    case SleepStage::N3: return "N3";
    case SleepStage::REM: return "REM";
  }
  return "?";
}

std::optional<SleepStage> stage_from_string(std::string_view token) {
  if (token == "W") return SleepStage::W;
  if (token == "N1") return SleepStage::N1;
  if (token == "N2") return SleepStage::N2;
  if (token == "N3") return SleepStage::N3;
  if (token == "REM") return SleepStage::REM;
  return std::nullopt;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  require(!sorted.empty(), errc::too_short, "quantile of empty sequence");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi) return sorted[lo];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantile_scale(std::span<const double> samples) {
  require(samples.size() >= 4, errc::too_short,
          "quantile_scale needs at least 4 samples, got " + std::to_string(samples.size()));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = quantile_sorted(sorted, 0.5);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  require(iqr > 1e-12, errc::constant_signal, "signal IQR below 1e-12");
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = (samples[i] - median) / iqr;
  return out;
}

namespace {

// Hann-windowed sinc interpolation kernel. `cut` is the normalized cutoff
// (min(1, dst/src)); the kernel stretches by 1/cut when downsampling so the
// low-pass lands at the output Nyquist. half_width is in cut-scaled units.
inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> resample(std::span<const double> samples, double src_hz, double dst_hz) {
  require(src_hz > 0 && dst_hz > 0, errc::invalid_rate,
          "sample rates must be positive");
  if (src_hz == dst_hz) return {samples.begin(), samples.end()};

  const double ratio = dst_hz / src_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(samples.size()) * ratio));
  std::vector<double> out(out_len, 0.0);
  if (samples.empty() || out_len == 0) return out;

  constexpr int kTapsPerPhase = 64;
  constexpr double kHalf = kTapsPerPhase / 2.0;
  const double cut = std::min(1.0, ratio);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());

  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;  // position in source samples
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(center - kHalf / cut));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(center + kHalf / cut));
    double acc = 0.0;
    double wsum = 0.0;
    for (std::ptrdiff_t m = lo; m <= hi; ++m) {
      const double u = cut * (static_cast<double>(m) - center);  // in [-kHalf, kHalf]
      const double w = sinc(u) * (0.5 + 0.5 * std::cos(std::numbers::pi * u / kHalf));
      wsum += w;
      if (m >= 0 && m < n) acc += w * samples[static_cast<std::size_t>(m)];
    }
    // Normalizing by the full kernel sum keeps unity DC gain; taps beyond the
    // signal act as zeros.
    out[i] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

EpochSet epoch_split(const Recording& rec) {
  require(std::abs(rec.sample_rate_hz - kEpochRateHz) < 1e-9, errc::invalid_rate,
          "epoch_split expects a 100 Hz recording");
  const std::size_t complete = rec.samples.size() / kEpochSamples;
  require(complete >= 1, errc::no_complete_epoch,
          "recording shorter than one 30 s epoch");
  const std::size_t count = std::min(complete, rec.stage_labels.size());

  EpochSet set;
  set.epochs.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    Epoch ep;
    ep.values.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(e * kEpochSamples),
                     rec.samples.begin() + static_cast<std::ptrdiff_t>((e + 1) * kEpochSamples));
    ep.label = rec.stage_labels[e];
    set.epochs.push_back(std::move(ep));
  }
  if (!rec.subject_id.empty()) set.subjects.assign(count, rec.subject_id);
  return set;
}

EpochSet add_gaussian_noise(const EpochSet& epochs, double scale, double ref_std,
                            std::uint64_t seed) {
  require(scale >= 0.0, errc::invalid_config, "noise scale must be >= 0");
  require(ref_std > 0.0, errc::invalid_config, "reference std must be > 0");
  if (scale == 0.0) return epochs;

  EpochSet out = epochs;
  Rng rng(seed);
  const double sigma = scale * ref_std;
  for (auto& ep : out.epochs) {
    for (auto& v : ep.values) v += sigma * rng.gaussian();
  }
  return out;
}

double pooled_std(const EpochSet& epochs) {
  std::size_t n = 0;
  double mean = 0.0;
  for (const auto& ep : epochs.epochs) {
    for (double v : ep.values) {
      ++n;
      mean += v;
    }
  }
  require(n > 0, errc::too_short, "pooled_std of empty epoch set");
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& ep : epochs.epochs) {
    for (double v : ep.values) var += (v - mean) * (v - mean);
  }
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace somn
