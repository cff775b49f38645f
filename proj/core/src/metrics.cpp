#include "somn/metrics.hpp"

#include "somn/error.hpp"

namespace somn {

F1Report classification_report(const PredictionSet& p) {
  require(p.size() >= 1, errc::too_short, "empty prediction set");
  require(p.predicted.size() == p.truth.size(), errc::shape_mismatch,
          "predicted/truth length mismatch");

  F1Report r;
  int correct = 0;
  for (int i = 0; i < p.size(); ++i) {
    const int t = static_cast<int>(p.truth[static_cast<std::size_t>(i)]);
    const int y = static_cast<int>(p.predicted[static_cast<std::size_t>(i)]);
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
    if (t == y) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / p.size();

  double macro_sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumStages; ++c) {
    int tp = r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    int truth_c = 0, pred_c = 0;
    for (int o = 0; o < kNumStages; ++o) {
      truth_c += r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
      pred_c += r.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
    }
    if (truth_c == 0 && pred_c == 0) {
      r.per_class[static_cast<std::size_t>(c)] = 0.0;
      r.defined[static_cast<std::size_t>(c)] = false;
      continue;
    }
    r.defined[static_cast<std::size_t>(c)] = true;
    const double precision = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    const double recall = truth_c > 0 ? static_cast<double>(tp) / truth_c : 0.0;
    const double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    r.per_class[static_cast<std::size_t>(c)] = f1;
    macro_sum += f1;
    ++present;
  }
  r.macro_f1 = present > 0 ? macro_sum / present : 0.0;
  return r;
}

double macro_f1(const PredictionSet& p) { return classification_report(p).macro_f1; }

double accuracy(const PredictionSet& p) { return classification_report(p).accuracy; }

std::array<double, kNumStages> per_class_f1(const PredictionSet& p) {
  return classification_report(p).per_class;
}

}  // namespace somn
