#include "somn/synth.hpp"

#include <cmath>
#include <numbers>

#include "somn/error.hpp"
#include "somn/rng.hpp"

namespace somn {

namespace {

void normalize_unit(std::vector<double>& w) {
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  require(norm > 0.0, errc::zero_filter, "template waveform is all zero");
  for (double& v : w) v /= norm;
}

std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%03d", index);
  return buf;
}

}  // namespace

std::vector<TemplateSpec> builtin_templates() {
  constexpr double fs = kEpochRateHz;
  std::vector<TemplateSpec> out;

  {
    // 13 Hz burst under a Gaussian envelope, 1.0 s.
    TemplateSpec t;
    t.name = "spindle";
    const int n = static_cast<int>(1.0 * fs);
    t.waveform.resize(n);
    const double center = (n - 1) / 2.0;
    const double width = n / 6.0;
    for (int i = 0; i < n; ++i) {
      const double env = std::exp(-0.5 * std::pow((i - center) / width, 2.0));
      t.waveform[i] = env * std::sin(2.0 * std::numbers::pi * 13.0 * i / fs);
    }
    normalize_unit(t.waveform);
    t.classes = {SleepStage::N2};
    t.min_occurrences = 3;
    t.max_occurrences = 5;
    out.push_back(std::move(t));
  }
  {
    // Single biphasic sharp transient, 0.7 s: a sharp downward deflection
    // followed by a slower rebound.
    TemplateSpec t;
    t.name = "kcomplex";
    const int n = static_cast<int>(0.7 * fs);
    t.waveform.resize(n);
    for (int i = 0; i < n; ++i) {
      const double ts = i / fs;
      const double neg = -std::exp(-0.5 * std::pow((ts - 0.22) / 0.045, 2.0));
      const double pos = 0.75 * std::exp(-0.5 * std::pow((ts - 0.42) / 0.10, 2.0));
      t.waveform[i] = neg + pos;
    }
    normalize_unit(t.waveform);
    t.classes = {SleepStage::N2};
    t.min_occurrences = 3;
    t.max_occurrences = 5;
    out.push_back(std::move(t));
  }
  {
    // 2 Hz slow wave, 1.5 s, Hann-tapered.
    TemplateSpec t;
    t.name = "slowwave";
    const int n = static_cast<int>(1.5 * fs);
    t.waveform.resize(n);
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / (n - 1);
      const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
      t.waveform[i] = env * std::sin(2.0 * std::numbers::pi * 2.0 * i / fs);
    }
    normalize_unit(t.waveform);
    t.classes = {SleepStage::N3};
    t.min_occurrences = 4;
    t.max_occurrences = 6;
    out.push_back(std::move(t));
  }
  return out;
}

std::map<SleepStage, int> edf2013_scaled_counts() {
  // EDF-2013 stage totals {8285, 2804, 17799, 5703, 7717} scaled by 1/100,
  // rounded to the nearest integer.
  return {{SleepStage::W, 83},
          {SleepStage::N1, 28},
          {SleepStage::N2, 178},
          {SleepStage::N3, 57},
          {SleepStage::REM, 77}};
}

SynthSpec SynthSpec::defaults(std::uint64_t seed) {
  SynthSpec spec;
  spec.class_counts = edf2013_scaled_counts();
  spec.templates = builtin_templates();
  spec.background_noise_std = 1.0;
  spec.num_subjects = 10;
  spec.seed = seed;
  return spec;
}

namespace {

void validate(const SynthSpec& spec) {
  bool any = false;
  for (const auto& [stage, count] : spec.class_counts) {
    require(count >= 0, errc::invalid_config, "negative class count");
    if (count > 0) any = true;
  }
  require(any, errc::invalid_config, "at least one class count must be positive");
  require(spec.background_noise_std >= 0.0, errc::invalid_config,
          "background noise std must be >= 0");
  require(spec.num_subjects >= 1, errc::invalid_config, "num_subjects must be >= 1");
  for (const auto& t : spec.templates) {
    require(!t.waveform.empty() && static_cast<int>(t.waveform.size()) < kEpochSamples,
            errc::invalid_config, "template length must be in [1, 3000)");
    double norm2 = 0.0;
    for (double v : t.waveform) norm2 += v * v;
    require(std::abs(std::sqrt(norm2) - 1.0) <= 1e-9, errc::invalid_config,
            "template waveform must be unit norm: " + t.name);
    require(t.amplitude_min > 0.0 && t.amplitude_max >= t.amplitude_min, errc::invalid_config,
            "bad amplitude range for template " + t.name);
    require(t.min_occurrences >= 0 && t.max_occurrences >= t.min_occurrences,
            errc::invalid_config, "bad occurrence range for template " + t.name);
  }
}

}  // namespace

SynthDataset generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  SynthDataset data;
  data.templates = spec.templates;

  for (int stage_idx = 0; stage_idx < kNumStages; ++stage_idx) {
    const auto stage = static_cast<SleepStage>(stage_idx);
    const auto it = spec.class_counts.find(stage);
    const int count = it == spec.class_counts.end() ? 0 : it->second;

    for (int e = 0; e < count; ++e) {
      Epoch ep;
      ep.label = stage;
      ep.values.resize(kEpochSamples);
      for (auto& v : ep.values) v = spec.background_noise_std * rng.gaussian();

      std::vector<PlantedOccurrence> planted;
      for (std::size_t ti = 0; ti < spec.templates.size(); ++ti) {
        const auto& tpl = spec.templates[ti];
        if (!tpl.classes.contains(stage)) continue;
        const int len = static_cast<int>(tpl.waveform.size());
        const auto wanted =
            static_cast<int>(rng.uniform_int(tpl.min_occurrences, tpl.max_occurrences));
        for (int k = 0; k < wanted; ++k) {
          int offset = -1;
          for (int attempt = 0; attempt < 1000; ++attempt) {
            const auto cand = static_cast<int>(rng.uniform_int(0, kEpochSamples - len));
            bool clash = false;
            for (const auto& occ : planted) {
              if (cand < occ.offset + occ.length && occ.offset < cand + len) {
                clash = true;
                break;
              }
            }
            if (!clash) {
              offset = cand;
              break;
            }
          }
          require(offset >= 0, errc::placement_overflow,
                  "cannot place occurrence of " + tpl.name + " without overlap");
          const double amplitude = rng.uniform(tpl.amplitude_min, tpl.amplitude_max);
          for (int i = 0; i < len; ++i) ep.values[offset + i] += amplitude * tpl.waveform[i];
          planted.push_back({static_cast<int>(ti), offset, len, amplitude});
        }
      }
      data.epochs.epochs.push_back(std::move(ep));
      data.epochs.subjects.push_back(subject_name(e % spec.num_subjects));
      data.occurrences.push_back(std::move(planted));
    }
  }
  return data;
}

}  // namespace somn
