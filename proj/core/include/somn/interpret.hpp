#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somn/model.hpp"
#include "somn/signal.hpp"
#include "somn/synth.hpp"

namespace somn {

// |d logit_target / d x| per input sample.
struct SaliencyMap {
  std::vector<double> values;
  SleepStage target = SleepStage::W;
};

// Gradient of the target-class output with respect to the input, elementwise
// absolute value. By default the pre-softmax logit is differentiated;
// post_softmax switches to the softmax probability of the target class.
SaliencyMap saliency(const ModelGraph& model, const Epoch& epoch, SleepStage target,
                     bool post_softmax = false);

struct Region {
  int start = 0;
  int end = 0;  // half-open [start, end)
};

// Greedy selection of k disjoint fixed-width windows by descending window-sum
// saliency; ties break toward the lowest start index.
std::vector<Region> top_k_regions(const SaliencyMap& map, int k, int window);

// Fraction of planted-occurrence samples covered by the union of regions.
double saliency_overlap(std::span<const Region> regions,
                        std::span<const PlantedOccurrence> occurrences);

// Pearson correlation between the saliency of the clean epoch and of a
// noise-injected copy, both differentiated at the clean predicted class.
double saliency_stability(const ModelGraph& model, const Epoch& epoch, double scale,
                          double ref_std, std::uint64_t seed);

enum class FreqBand { delta, theta, alpha, fast };  // <4, 4-8, 8-12, >12 Hz

const char* to_string(FreqBand band);

struct FilterSpectrum {
  std::vector<double> freqs;  // Hz, up to Nyquist
  std::vector<double> power;  // |DFT|^2
  FreqBand dominant_band = FreqBand::delta;
  double peak_freq = 0.0;
};

// Magnitude-squared DFT of the filter, zero-padded to at least 256 points.
FilterSpectrum filter_spectrum(std::span<const double> filter, double fs);

}  // namespace somn
