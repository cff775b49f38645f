#include "somn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "somn/error.hpp"

namespace somn {

namespace {

double loss_with_argmax(const ModelGraph& model, const Tensor& x, std::span<const int> labels,
                        std::vector<std::vector<int>>& argmax_out) {
  ModelGraph::Trace trace;
  model.forward_trace(x, trace);
  argmax_out = trace.argmax;
  return softmax_ce_loss(trace.logits, labels, nullptr);
}

}  // namespace

GradReport grad_check(ModelGraph& model, const Tensor& x, std::span<const int> labels,
                      double epsilon) {
  require(epsilon > 0.0, errc::invalid_epsilon, "epsilon must be > 0");
  require(x.batch <= 8 && x.length <= 512, errc::invalid_config,
          "grad_check batch must be <= 8 items of <= 512 samples");
  require(model.has_loss_layer(), errc::invalid_config, "grad_check needs a loss layer");

  GradReport report;
  report.epsilon = epsilon;

  ModelGraph::Grads analytic = model.make_grads();
  model.loss_and_gradients(x, labels, analytic);

  report.per_param.resize(analytic.layers.size());
  report.per_layer_max.assign(analytic.layers.size(), 0.0);

  for (int li = 0; li < model.layer_count(); ++li) {
    auto& layer = model.layer(li);
    auto params = layer.params();
    report.per_param[static_cast<std::size_t>(li)].assign(params.size(), 0.0);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      const double saved = params[pi];

      std::vector<std::vector<int>> argmax_plus, argmax_minus;
      params[pi] = saved + epsilon;
      const double loss_plus = loss_with_argmax(model, x, labels, argmax_plus);
      params[pi] = saved - epsilon;
      const double loss_minus = loss_with_argmax(model, x, labels, argmax_minus);
      params[pi] = saved;

      if (argmax_plus != argmax_minus) {
        // The loss is only piecewise smooth in this parameter at this point.
        report.per_param[static_cast<std::size_t>(li)][pi] = -1.0;
        ++report.skipped;
        continue;
      }
      const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double a = analytic.layers[static_cast<std::size_t>(li)][pi];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.per_param[static_cast<std::size_t>(li)][pi] = rel;
      report.per_layer_max[static_cast<std::size_t>(li)] =
          std::max(report.per_layer_max[static_cast<std::size_t>(li)], rel);
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace somn
