#pragma once

#include <optional>
#include <vector>

#include "somn/metrics.hpp"

namespace somn {

struct CalibrationBin {
  double lo = 0.0;  // bins are right-closed: (lo, hi]
  double hi = 0.0;
  int count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  bool included = false;  // count >= 50: eligible for the reliability diagram
};

struct CalibrationReport {
  double ece = 0.0;  // fraction in [0, 1]
  std::vector<CalibrationBin> bins;
  int num_bins = 0;
  std::optional<double> temperature;

  double ece_percent() const { return 100.0 * ece; }
};

// Per-row maximum softmax probability, in [1/5, 1].
std::vector<double> confidence(const PredictionSet& p);

// Expected calibration error over M equal-width bins of (0, 1]:
// ECE = sum_m |B_m|/n * |acc(B_m) - conf(B_m)|; empty bins contribute 0.
CalibrationReport ece(const PredictionSet& p, int num_bins);

// Mean negative log likelihood of softmax(logits / T) against the truth.
double mean_nll(const PredictionSet& p, double temperature);

// Minimizes validation NLL over T in [0.05, 20] by golden-section search
// (|dT| <= 1e-4). T = 1 and the interval bounds are always candidates, so the
// fitted temperature never increases NLL relative to T = 1.
double fit_temperature(const PredictionSet& val);

// Replaces probabilities with softmax(logits / T). Predicted labels are
// unchanged: positive scaling preserves the argmax.
PredictionSet apply_temperature(const PredictionSet& p, double temperature);

}  // namespace somn
