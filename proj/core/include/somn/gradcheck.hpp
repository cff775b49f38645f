#pragma once

#include <span>
#include <vector>

#include "somn/model.hpp"

namespace somn {

struct GradReport {
  double epsilon = 0.0;
  double max_rel_err = 0.0;
  int checked = 0;
  int skipped = 0;  // parameters whose perturbation flipped a pooling argmax
  // Relative error per parameter in layer order; -1 marks skipped parameters.
  std::vector<std::vector<double>> per_param;
  std::vector<double> per_layer_max;
};

// Central finite differences, (f(p+eps) - f(p-eps)) / 2eps, against the
// analytic gradient of the cross-entropy loss, reported as
// |a - n| / max(|a|, |n|, 1e-8). Parameters whose perturbation changes any
// pooling argmax are detected and skipped. The batch must stay small
// (<= 8 items of <= 512 samples) to bound runtime.
GradReport grad_check(ModelGraph& model, const Tensor& x, std::span<const int> labels,
                      double epsilon);

}  // namespace somn
