#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "somn/layers.hpp"

namespace somn {

// An ordered feed-forward network. At most one loss layer (softmax_ce) may
// appear, and only at the end; logits() and prediction paths stop before it.
// The graph is immutable during forward/backward, so a model can be shared
// read-only across threads.
class ModelGraph {
 public:
  ModelGraph() = default;
  ModelGraph(const ModelGraph& other);
  ModelGraph& operator=(const ModelGraph& other);
  ModelGraph(ModelGraph&&) noexcept = default;
  ModelGraph& operator=(ModelGraph&&) noexcept = default;

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  std::uint64_t seed() const { return seed_; }

  void add(std::unique_ptr<Layer> layer);

  int layer_count() const { return static_cast<int>(layers_.size()); }
  Layer& layer(int i) { return *layers_[static_cast<std::size_t>(i)]; }
  const Layer& layer(int i) const { return *layers_[static_cast<std::size_t>(i)]; }
  bool has_loss_layer() const;
  // Number of layers excluding the trailing loss layer.
  int body_layer_count() const;

  std::size_t param_count() const;

  // Walks the shape chain through the body layers; throws on mismatch.
  ActShape output_shape(ActShape in) const;

  // Per-layer flat gradient buffers, aligned with each layer's params().
  struct Grads {
    std::vector<std::vector<double>> layers;
    void zero();
  };
  Grads make_grads() const;

  struct Trace {
    std::vector<Tensor> inputs;            // input to each body layer
    std::vector<std::vector<int>> argmax;  // pooling selections per layer
    Tensor logits;
  };

  // Inference forward (no trace).
  Tensor logits(const Tensor& x) const;

  // Forward through body layers recording inputs and pooling argmax.
  void forward_trace(const Tensor& x, Trace& trace) const;

  // Cross-entropy loss plus parameter gradients. The input gradient of the
  // first layer is only computed when input_grad is non-null.
  double loss_and_gradients(const Tensor& x, std::span<const int> labels, Grads& grads,
                            Tensor* input_grad = nullptr) const;

  // Backpropagates an arbitrary upstream on the logits down to the input
  // (saliency path). Parameter gradients are discarded.
  Tensor input_gradient(const Tensor& x, const Tensor& upstream_logits) const;

  std::string describe() const;

 private:
  Tensor backward_from(const Trace& trace, const Tensor& dlogits, Grads* grads,
                       bool input_grad_needed) const;

  std::vector<std::unique_ptr<Layer>> layers_;
  std::uint64_t seed_ = 0;
};

// One SGD-with-momentum update: v = momentum * v + g; p -= lr * v.
// Throws NonFinite if any updated parameter is NaN/Inf.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum);

// Applies sgd_step per layer, then re-projects unit-norm rows of
// cosine_normalized layers back onto the unit sphere.
class SgdOptimizer {
 public:
  SgdOptimizer(const ModelGraph& model, double lr, double momentum);
  void step(ModelGraph& model, const ModelGraph::Grads& grads);

  double lr() const { return lr_; }
  void set_lr(double lr);

 private:
  double lr_, momentum_;
  std::vector<std::vector<double>> velocity_;
};

// Renormalizes each row of length row_len to unit norm.
void renormalize_rows(std::span<double> params, int row_len);

}  // namespace somn
