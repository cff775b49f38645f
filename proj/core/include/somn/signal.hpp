#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace somn {

// The five AASM stages scored per 30-second epoch.
enum class SleepStage : int { W = 0, N1 = 1, N2 = 2, N3 = 3, REM = 4 };

inline constexpr int kNumStages = 5;
inline constexpr int kEpochSamples = 3000;  // 30 s at 100 Hz
inline constexpr double kEpochRateHz = 100.0;
inline constexpr double kEpochSeconds = 30.0;

const char* to_string(SleepStage stage);
std::optional<SleepStage> stage_from_string(std::string_view token);

// A single-channel sampled signal with one stage label per 30-second epoch.
struct Recording {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::string subject_id;
  std::vector<SleepStage> stage_labels;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// A fixed-length labeled segment ready for training (3000 samples at 100 Hz).
struct Epoch {
  std::vector<double> values;
  SleepStage label = SleepStage::W;
};

// Labeled epochs plus per-epoch subject attribution. `subjects` is either
// empty (unattributed) or parallel to `epochs`; subject-wise splitting and
// subsampling rely on it.
struct EpochSet {
  std::vector<Epoch> epochs;
  std::vector<std::string> subjects;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }
  std::set<std::string> source_subjects() const {
    return {subjects.begin(), subjects.end()};
  }
};

// Rescales to median 0 and interquartile range 1: y = (x - median) / IQR.
// Quantiles use sorted-order linear interpolation at rank (n-1)*q. Extreme
// values are kept as-is.
std::vector<double> quantile_scale(std::span<const double> samples);

// Linear-interpolation quantile of an already sorted sequence.
double quantile_sorted(std::span<const double> sorted, double q);

// Low-pass windowed-sinc (Hann, 64 taps per phase) polyphase resampling.
// Output length is round(len * dst_hz / src_hz). Equal rates return a copy.
std::vector<double> resample(std::span<const double> samples, double src_hz, double dst_hz);

// Splits a 100 Hz recording into consecutive non-overlapping 3000-sample
// epochs paired with stage labels by index. The trailing partial segment and
// epochs beyond the label count are dropped.
EpochSet epoch_split(const Recording& rec);

// Adds i.i.d. Gaussian noise with standard deviation scale * ref_std to every
// sample. ref_std is the pooled standard deviation of the clean evaluation
// signal, computed once via pooled_std(). Deterministic given seed.
EpochSet add_gaussian_noise(const EpochSet& epochs, double scale, double ref_std,
                            std::uint64_t seed);

// Standard deviation over all values of all epochs (population form).
double pooled_std(const EpochSet& epochs);

}  // namespace somn
