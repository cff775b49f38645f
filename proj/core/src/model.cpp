#include "somn/model.hpp"

#include <cmath>

#include "somn/error.hpp"

namespace somn {

ModelGraph::ModelGraph(const ModelGraph& other) : seed_(other.seed_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

ModelGraph& ModelGraph::operator=(const ModelGraph& other) {
  if (this == &other) return *this;
  layers_.clear();
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
  seed_ = other.seed_;
  return *this;
}

void ModelGraph::add(std::unique_ptr<Layer> layer) {
  require(layers_.empty() || layers_.back()->kind() != LayerKind::softmax_ce,
          errc::invalid_config, "no layer may follow the loss layer");
  layers_.push_back(std::move(layer));
}

bool ModelGraph::has_loss_layer() const {
  return !layers_.empty() && layers_.back()->kind() == LayerKind::softmax_ce;
}

int ModelGraph::body_layer_count() const {
  return layer_count() - (has_loss_layer() ? 1 : 0);
}

std::size_t ModelGraph::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->param_count();
  return n;
}

ActShape ModelGraph::output_shape(ActShape in) const {
  ActShape shape = in;
  const int body = body_layer_count();
  for (int i = 0; i < body; ++i) shape = layers_[static_cast<std::size_t>(i)]->out_shape(shape);
  return shape;
}

void ModelGraph::Grads::zero() {
  for (auto& g : layers) std::fill(g.begin(), g.end(), 0.0);
}

ModelGraph::Grads ModelGraph::make_grads() const {
  Grads g;
  g.layers.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i)
    g.layers[i].assign(layers_[i]->param_count(), 0.0);
  return g;
}

Tensor ModelGraph::logits(const Tensor& x) const {
  Tensor act = x;
  const int body = body_layer_count();
  for (int i = 0; i < body; ++i)
    act = layers_[static_cast<std::size_t>(i)]->forward(act, nullptr);
  return act;
}

void ModelGraph::forward_trace(const Tensor& x, Trace& trace) const {
  const int body = body_layer_count();
  trace.inputs.assign(static_cast<std::size_t>(body), Tensor{});
  trace.argmax.assign(static_cast<std::size_t>(body), {});
  Tensor act = x;
  for (int i = 0; i < body; ++i) {
    trace.inputs[static_cast<std::size_t>(i)] = std::move(act);
    act = layers_[static_cast<std::size_t>(i)]->forward(
        trace.inputs[static_cast<std::size_t>(i)], &trace.argmax[static_cast<std::size_t>(i)]);
  }
  trace.logits = std::move(act);
}

Tensor ModelGraph::backward_from(const Trace& trace, const Tensor& dlogits, Grads* grads,
                                 bool input_grad_needed) const {
  const int body = body_layer_count();
  Tensor upstream = dlogits;
  static const std::vector<double> kNoParams;
  for (int i = body - 1; i >= 0; --i) {
    auto& layer = *layers_[static_cast<std::size_t>(i)];
    const bool need_x_grad = i > 0 || input_grad_needed;
    std::span<double> gspan;
    std::vector<double> scratch;
    if (grads) {
      gspan = std::span<double>(grads->layers[static_cast<std::size_t>(i)]);
    } else if (layer.param_count() > 0) {
      scratch.assign(layer.param_count(), 0.0);
      gspan = scratch;
    }
    Tensor next = layer.backward(trace.inputs[static_cast<std::size_t>(i)],
                                 trace.argmax[static_cast<std::size_t>(i)], upstream, gspan,
                                 need_x_grad);
    if (!need_x_grad && i == 0) return {};
    upstream = std::move(next);
  }
  return upstream;
}

double ModelGraph::loss_and_gradients(const Tensor& x, std::span<const int> labels, Grads& grads,
                                      Tensor* input_grad) const {
  require(has_loss_layer(), errc::invalid_config, "model has no loss layer");
  Trace trace;
  forward_trace(x, trace);
  Tensor dlogits;
  const double loss = softmax_ce_loss(trace.logits, labels, &dlogits);
  Tensor gx = backward_from(trace, dlogits, &grads, input_grad != nullptr);
  if (input_grad) *input_grad = std::move(gx);
  return loss;
}

Tensor ModelGraph::input_gradient(const Tensor& x, const Tensor& upstream_logits) const {
  Trace trace;
  forward_trace(x, trace);
  require(upstream_logits.same_shape(trace.logits), errc::shape_mismatch,
          "upstream does not match logits shape");
  return backward_from(trace, upstream_logits, nullptr, true);
}

std::string ModelGraph::describe() const {
  std::string out;
  for (const auto& l : layers_) {
    if (!out.empty()) out += " -> ";
    out += l->describe();
  }
  return out;
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum) {
  require(lr > 0.0, errc::invalid_config, "learning rate must be > 0");
  require(params.size() == grads.size() && params.size() == velocity.size(),
          errc::shape_mismatch, "parameter/gradient/velocity size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
    require(std::isfinite(params[i]), errc::non_finite, "parameter update produced NaN/Inf");
  }
}

void renormalize_rows(std::span<double> params, int row_len) {
  require(row_len >= 1 && params.size() % static_cast<std::size_t>(row_len) == 0,
          errc::shape_mismatch, "parameter count not divisible by row length");
  for (std::size_t r = 0; r < params.size() / static_cast<std::size_t>(row_len); ++r) {
    double* row = params.data() + r * static_cast<std::size_t>(row_len);
    double norm2 = 0.0;
    for (int l = 0; l < row_len; ++l) norm2 += row[l] * row[l];
    const double norm = std::sqrt(norm2);
    require(norm > 0.0, errc::zero_filter, "filter row collapsed to zero during renormalization");
    for (int l = 0; l < row_len; ++l) row[l] /= norm;
  }
}

SgdOptimizer::SgdOptimizer(const ModelGraph& model, double lr, double momentum)
    : lr_(lr), momentum_(momentum) {
  require(lr >= 0.0, errc::invalid_config, "learning rate must be >= 0");
  velocity_.resize(static_cast<std::size_t>(model.layer_count()));
  for (int i = 0; i < model.layer_count(); ++i)
    velocity_[static_cast<std::size_t>(i)].assign(model.layer(i).param_count(), 0.0);
}

void SgdOptimizer::set_lr(double lr) {
  require(lr >= 0.0, errc::invalid_config, "learning rate must be >= 0");
  lr_ = lr;
}

void SgdOptimizer::step(ModelGraph& model, const ModelGraph::Grads& grads) {
  if (lr_ == 0.0) return;  // lr 0 means "train nothing": parameters stay put
  require(grads.layers.size() == velocity_.size(), errc::shape_mismatch,
          "gradient layout does not match optimizer state");
  for (int i = 0; i < model.layer_count(); ++i) {
    auto& layer = model.layer(i);
    if (layer.param_count() == 0) continue;
    sgd_step(layer.params(), grads.layers[static_cast<std::size_t>(i)],
             velocity_[static_cast<std::size_t>(i)], lr_, momentum_);
    if (layer.unit_norm_rows()) renormalize_rows(layer.params(), layer.norm_row_length());
  }
}

}  // namespace somn
