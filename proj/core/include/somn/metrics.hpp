#pragma once

#include <array>
#include <vector>

#include "somn/signal.hpp"
#include "somn/tensor.hpp"

namespace somn {

// Per-epoch logits and probabilities with predicted and true labels; the
// input to every classification and calibration metric.
struct PredictionSet {
  Matrix logits;         // N x 5
  Matrix probabilities;  // N x 5, rows sum to 1
  std::vector<SleepStage> predicted;
  std::vector<SleepStage> truth;

  int size() const { return static_cast<int>(truth.size()); }
};

struct F1Report {
  std::array<double, kNumStages> per_class{};
  // False when a class is absent from both truth and prediction; its F1 is
  // reported as 0 and excluded from the macro mean.
  std::array<bool, kNumStages> defined{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::array<std::array<int, kNumStages>, kNumStages> confusion{};  // [truth][pred]
};

F1Report classification_report(const PredictionSet& p);

double macro_f1(const PredictionSet& p);
double accuracy(const PredictionSet& p);
std::array<double, kNumStages> per_class_f1(const PredictionSet& p);

}  // namespace somn
