#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "somn/signal.hpp"

namespace somn {

// A waveform planted into epochs of specific classes. The waveform is unit
// norm; planted instances are scaled by a per-occurrence amplitude.
struct TemplateSpec {
  std::string name;
  std::vector<double> waveform;
  std::set<SleepStage> classes;
  int min_occurrences = 1;
  int max_occurrences = 1;
  double amplitude_min = 0.5;
  double amplitude_max = 5.0;
};

struct SynthSpec {
  std::map<SleepStage, int> class_counts;
  std::vector<TemplateSpec> templates;
  double background_noise_std = 1.0;
  int num_subjects = 10;
  std::uint64_t seed = 0;

  // EDF-2013-derived class counts, builtin templates, noise std 1.0.
  static SynthSpec defaults(std::uint64_t seed);
};

// Stand-ins for the waveforms experts key on: a 13 Hz spindle-like burst and a
// biphasic sharp transient planted in N2, and a 2 Hz slow wave planted in N3.
// All sampled at 100 Hz, unit norm.
std::vector<TemplateSpec> builtin_templates();

// The EDF-2013 class distribution scaled down by 100: {W:83, N1:28, N2:178,
// N3:57, REM:77}.
std::map<SleepStage, int> edf2013_scaled_counts();

struct PlantedOccurrence {
  int template_index = 0;
  int offset = 0;
  int length = 0;
  double amplitude = 0.0;
};

struct SynthDataset {
  EpochSet epochs;
  // Ground-truth occurrence map, parallel to epochs. Replaces an external
  // detector when scoring whether saliency landed on the planted patterns.
  std::vector<std::vector<PlantedOccurrence>> occurrences;
  std::vector<TemplateSpec> templates;
};

// Generates the labeled dataset: per-class epoch counts exactly as requested,
// Gaussian background, and non-overlapping template occurrences at random
// offsets and amplitudes. Bit-reproducible for a fixed seed.
SynthDataset generate(const SynthSpec& spec);

}  // namespace somn
