#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "somn/conv.hpp"
#include "somn/rng.hpp"
#include "somn/tensor.hpp"

namespace somn {

enum class LayerKind : int {
  conv = 0,
  cosine_conv = 1,
  max_pool = 2,
  one_max_pool = 3,
  relu = 4,
  dense = 5,
  softmax_ce = 6,
};

const char* to_string(LayerKind kind);

// Shape of an activation: {channels, length}.
using ActShape = std::pair<int, int>;

// A feed-forward layer. Layers are immutable during forward/backward; pooling
// layers record their argmax selections into the caller-provided vector so a
// model can be shared read-only across threads.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual ActShape out_shape(ActShape in) const = 0;

  // argmax_out is required by pooling layers when a backward pass will follow;
  // pass nullptr for pure inference.
  virtual Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const = 0;

  // Returns the gradient with respect to x when need_input_grad, otherwise an
  // empty tensor. Parameter gradients accumulate into grad_params.
  virtual Tensor backward(const Tensor& x, const std::vector<int>& argmax,
                          const Tensor& upstream, std::span<double> grad_params,
                          bool need_input_grad) const = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual std::span<double> params() { return {}; }
  virtual std::span<const double> params() const { return {}; }

  // True for cosine_normalized convolutions: the optimizer re-projects rows of
  // norm_row_length() onto the unit sphere after each step.
  virtual bool unit_norm_rows() const { return false; }
  virtual int norm_row_length() const { return 0; }

  // Serialization hooks: fixed-size integer configuration per kind.
  virtual std::vector<std::int64_t> config_ints() const { return {}; }

  virtual std::unique_ptr<Layer> clone() const = 0;
};

// Standard multi-channel valid convolution, no bias.
class ConvLayer final : public Layer {
 public:
  ConvLayer(int out_channels, int in_channels, int filter_len, int stride);
  static std::unique_ptr<ConvLayer> random(int out_channels, int in_channels, int filter_len,
                                           int stride, Rng& rng);

  LayerKind kind() const override { return LayerKind::conv; }
  std::string describe() const override;
  ActShape out_shape(ActShape in) const override;
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::size_t param_count() const override { return weights_.size(); }
  std::span<double> params() override { return weights_; }
  std::span<const double> params() const override { return weights_; }
  std::vector<std::int64_t> config_ints() const override;
  std::unique_ptr<Layer> clone() const override;

  int out_channels() const { return out_channels_; }
  int in_channels() const { return in_channels_; }
  int filter_len() const { return filter_len_; }
  int stride() const { return stride_; }
  double weight(int k, int c, int l) const {
    return weights_[(static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_ + l];
  }
  double& weight(int k, int c, int l) {
    return weights_[(static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_ + l];
  }

 private:
  int out_channels_, in_channels_, filter_len_, stride_;
  std::vector<double> weights_;  // (out, in, len)
};

// Cosine-similarity convolution over a single input channel.
class CosineConvLayer final : public Layer {
 public:
  CosineConvLayer(int filters, int filter_len, int stride, ConvMode mode);
  // Gaussian init followed by row normalization.
  static std::unique_ptr<CosineConvLayer> random(int filters, int filter_len, int stride,
                                                 ConvMode mode, Rng& rng);

  LayerKind kind() const override { return LayerKind::cosine_conv; }
  std::string describe() const override;
  ActShape out_shape(ActShape in) const override;
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::size_t param_count() const override { return weights_.size(); }
  std::span<double> params() override { return weights_; }
  std::span<const double> params() const override { return weights_; }
  bool unit_norm_rows() const override { return mode_ == ConvMode::cosine_normalized; }
  int norm_row_length() const override { return filter_len_; }
  std::vector<std::int64_t> config_ints() const override;
  std::unique_ptr<Layer> clone() const override;

  int filters() const { return filters_; }
  int filter_len() const { return filter_len_; }
  int stride() const { return stride_; }
  ConvMode mode() const { return mode_; }
  Matrix weight_matrix() const;
  void set_weight_matrix(const Matrix& w);

 private:
  int filters_, filter_len_, stride_;
  ConvMode mode_;
  std::vector<double> weights_;  // (filters, len)
};

class MaxPoolLayer final : public Layer {
 public:
  explicit MaxPoolLayer(int window);

  LayerKind kind() const override { return LayerKind::max_pool; }
  std::string describe() const override;
  ActShape out_shape(ActShape in) const override;
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::vector<std::int64_t> config_ints() const override { return {window_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPoolLayer>(window_); }

  int window() const { return static_cast<int>(window_); }

 private:
  std::int64_t window_;
};

class OneMaxPoolLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::one_max_pool; }
  std::string describe() const override { return "one_max_pool"; }
  ActShape out_shape(ActShape in) const override { return {in.first, 1}; }
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<OneMaxPoolLayer>(); }
};

class ReluLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  std::string describe() const override { return "relu"; }
  ActShape out_shape(ActShape in) const override { return in; }
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReluLayer>(); }
};

// Fully connected layer with bias; flattens (channels, length) to features.
class DenseLayer final : public Layer {
 public:
  DenseLayer(int in_features, int out_features);
  static std::unique_ptr<DenseLayer> random(int in_features, int out_features, Rng& rng);

  LayerKind kind() const override { return LayerKind::dense; }
  std::string describe() const override;
  ActShape out_shape(ActShape in) const override;
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::size_t param_count() const override { return params_.size(); }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  std::vector<std::int64_t> config_ints() const override;
  std::unique_ptr<Layer> clone() const override;

  int in_features() const { return in_features_; }
  int out_features() const { return out_features_; }
  // Layout: weights (out x in) row-major, then biases (out).
  double weight(int o, int i) const { return params_[static_cast<std::size_t>(o) * in_features_ + i]; }
  double& weight(int o, int i) { return params_[static_cast<std::size_t>(o) * in_features_ + i]; }
  double bias(int o) const { return params_[static_cast<std::size_t>(out_features_) * in_features_ + o]; }
  double& bias(int o) { return params_[static_cast<std::size_t>(out_features_) * in_features_ + o]; }

 private:
  int in_features_, out_features_;
  std::vector<double> params_;
};

// Terminal training loss marker; forward passes logits through unchanged.
class SoftmaxCELayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::softmax_ce; }
  std::string describe() const override { return "softmax_ce"; }
  ActShape out_shape(ActShape in) const override { return in; }
  Tensor forward(const Tensor& x, std::vector<int>* argmax_out) const override;
  Tensor backward(const Tensor& x, const std::vector<int>& argmax, const Tensor& upstream,
                  std::span<double> grad_params, bool need_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<SoftmaxCELayer>(); }
};

// Numerically stabilized softmax of each row of a (batch, classes, 1) tensor,
// returned as a (batch x classes) matrix.
Matrix softmax_rows(const Tensor& logits);

// Mean cross-entropy over the batch, computed in log-sum-exp form. When
// dlogits is non-null it receives (softmax - onehot) / batch.
double softmax_ce_loss(const Tensor& logits, std::span<const int> labels, Tensor* dlogits);

}  // namespace somn
