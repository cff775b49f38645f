#include "somn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "somn/error.hpp"
#include "somn/parallel.hpp"

namespace somn {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::cosine_conv: return "cosine_conv";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::one_max_pool: return "one_max_pool";
    case LayerKind::relu: return "relu";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax_ce: return "softmax_ce";
  }
  return "?";
}

// ---------------------------------------------------------------- ConvLayer

ConvLayer::ConvLayer(int out_channels, int in_channels, int filter_len, int stride)
    : out_channels_(out_channels), in_channels_(in_channels), filter_len_(filter_len),
      stride_(stride),
      weights_(static_cast<std::size_t>(out_channels) * in_channels * filter_len, 0.0) {
  require(out_channels >= 1 && in_channels >= 1 && filter_len >= 1 && stride >= 1,
          errc::invalid_config, "bad convolution configuration");
}

std::unique_ptr<ConvLayer> ConvLayer::random(int out_channels, int in_channels, int filter_len,
                                             int stride, Rng& rng) {
  auto layer = std::make_unique<ConvLayer>(out_channels, in_channels, filter_len, stride);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_channels) * filter_len);
  for (auto& w : layer->weights_) w = scale * rng.gaussian();
  return layer;
}

std::string ConvLayer::describe() const {
  return "conv(" + std::to_string(out_channels_) + "x" + std::to_string(in_channels_) + "x" +
         std::to_string(filter_len_) + ",s" + std::to_string(stride_) + ")";
}

ActShape ConvLayer::out_shape(ActShape in) const {
  require(in.first == in_channels_, errc::shape_mismatch,
          describe() + " expects " + std::to_string(in_channels_) + " input channels, got " +
              std::to_string(in.first));
  return {out_channels_, conv_output_length(in.second, filter_len_, stride_)};
}

Tensor ConvLayer::forward(const Tensor& x, std::vector<int>*) const {
  const ActShape shape = out_shape({x.channels, x.length});
  Tensor out(x.batch, shape.first, shape.second);
  const int out_len = shape.second;
  parallel_for(x.batch, [&](int b) {
    for (int k = 0; k < out_channels_; ++k) {
      double* ok = out.row(b, k);
      if (stride_ == 1) {
        std::fill(ok, ok + out_len, 0.0);
        for (int c = 0; c < in_channels_; ++c) {
          const double* xc = x.row(b, c);
          const double* wk =
              weights_.data() + (static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_;
          for (int l = 0; l < filter_len_; ++l) {
            const double coef = wk[l];
            const double* xs = xc + l;
            for (int i = 0; i < out_len; ++i) ok[i] += coef * xs[i];
          }
        }
        continue;
      }
      for (int i = 0; i < out_len; ++i) {
        const int base = i * stride_;
        double acc = 0.0;
        for (int c = 0; c < in_channels_; ++c) {
          const double* seg = x.row(b, c) + base;
          const double* wk =
              weights_.data() + (static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_;
          acc += detail::conv_dot(wk, seg, filter_len_);
        }
        ok[i] = acc;
      }
    }
  });
  return out;
}

Tensor ConvLayer::backward(const Tensor& x, const std::vector<int>&, const Tensor& upstream,
                           std::span<double> grad_params, bool need_input_grad) const {
  const ActShape shape = out_shape({x.channels, x.length});
  require(upstream.batch == x.batch && upstream.channels == shape.first &&
              upstream.length == shape.second,
          errc::shape_mismatch, "upstream shape mismatch in " + describe());
  require(grad_params.size() == weights_.size(), errc::shape_mismatch,
          "gradient buffer size mismatch");

  const int out_len = shape.second;
  Tensor grad_x;
  if (need_input_grad) grad_x = Tensor(x.batch, x.channels, x.length);

  // Per-sample buffers reduced in index order keep the result independent of
  // the worker count.
  std::vector<double> scratch(static_cast<std::size_t>(x.batch) * weights_.size(), 0.0);
  parallel_for(x.batch, [&](int b) {
    double* gw = scratch.data() + static_cast<std::size_t>(b) * weights_.size();
    for (int k = 0; k < out_channels_; ++k) {
      const double* uk = upstream.row(b, k);
      for (int i = 0; i < out_len; ++i) {
        const double u = uk[i];
        if (u == 0.0) continue;
        const int base = i * stride_;
        for (int c = 0; c < in_channels_; ++c) {
          const double* seg = x.row(b, c) + base;
          double* gwc = gw + (static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_;
          for (int l = 0; l < filter_len_; ++l) gwc[l] += u * seg[l];
          if (need_input_grad) {
            const double* wk =
                weights_.data() + (static_cast<std::size_t>(k) * in_channels_ + c) * filter_len_;
            double* gx = grad_x.row(b, c) + base;
            for (int l = 0; l < filter_len_; ++l) gx[l] += u * wk[l];
          }
        }
      }
    }
  });
  for (int b = 0; b < x.batch; ++b) {
    const double* gw = scratch.data() + static_cast<std::size_t>(b) * weights_.size();
    for (std::size_t i = 0; i < weights_.size(); ++i) grad_params[i] += gw[i];
  }
  return grad_x;
}

std::vector<std::int64_t> ConvLayer::config_ints() const {
  return {out_channels_, in_channels_, filter_len_, stride_};
}

std::unique_ptr<Layer> ConvLayer::clone() const { return std::make_unique<ConvLayer>(*this); }

// ---------------------------------------------------------- CosineConvLayer

CosineConvLayer::CosineConvLayer(int filters, int filter_len, int stride, ConvMode mode)
    : filters_(filters), filter_len_(filter_len), stride_(stride), mode_(mode),
      weights_(static_cast<std::size_t>(filters) * filter_len, 0.0) {
  require(filters >= 1 && filter_len >= 2 && stride >= 1, errc::invalid_config,
          "bad cosine convolution configuration");
  require(mode != ConvMode::dot, errc::invalid_config,
          "cosine convolution requires a cosine mode");
}

std::unique_ptr<CosineConvLayer> CosineConvLayer::random(int filters, int filter_len, int stride,
                                                         ConvMode mode, Rng& rng) {
  auto layer = std::make_unique<CosineConvLayer>(filters, filter_len, stride, mode);
  for (int k = 0; k < filters; ++k) {
    double* row = layer->weights_.data() + static_cast<std::size_t>(k) * filter_len;
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int l = 0; l < filter_len; ++l) {
        row[l] = rng.gaussian();
        norm2 += row[l] * row[l];
      }
    } while (norm2 <= 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int l = 0; l < filter_len; ++l) row[l] *= inv;
  }
  return layer;
}

std::string CosineConvLayer::describe() const {
  return std::string("cosine_conv(") + std::to_string(filters_) + "x" +
         std::to_string(filter_len_) + ",s" + std::to_string(stride_) +
         (mode_ == ConvMode::cosine_full ? ",full" : ",normalized") + ")";
}

ActShape CosineConvLayer::out_shape(ActShape in) const {
  require(in.first == 1, errc::shape_mismatch,
          "cosine convolution expects a single input channel");
  return {filters_, conv_output_length(in.second, filter_len_, stride_)};
}

Tensor CosineConvLayer::forward(const Tensor& x, std::vector<int>*) const {
  const ActShape shape = out_shape({x.channels, x.length});
  Tensor out(x.batch, shape.first, shape.second);
  const Matrix w = weight_matrix();
  parallel_for(x.batch, [&](int b) {
    detail::cos_forward_1(w, mode_, stride_, x.row(b, 0), x.length, out.row(b, 0), shape.second);
  });
  return out;
}

Tensor CosineConvLayer::backward(const Tensor& x, const std::vector<int>&, const Tensor& upstream,
                                 std::span<double> grad_params, bool need_input_grad) const {
  const ActShape shape = out_shape({x.channels, x.length});
  require(upstream.batch == x.batch && upstream.channels == shape.first &&
              upstream.length == shape.second,
          errc::shape_mismatch, "upstream shape mismatch in " + describe());
  require(grad_params.size() == weights_.size(), errc::shape_mismatch,
          "gradient buffer size mismatch");

  Tensor grad_x;
  if (need_input_grad) grad_x = Tensor(x.batch, 1, x.length);
  const Matrix w = weight_matrix();

  std::vector<double> scratch(static_cast<std::size_t>(x.batch) * weights_.size(), 0.0);
  parallel_for(x.batch, [&](int b) {
    detail::cos_backward_1(w, mode_, stride_, x.row(b, 0), x.length, upstream.row(b, 0),
                           shape.second,
                           scratch.data() + static_cast<std::size_t>(b) * weights_.size(),
                           need_input_grad ? grad_x.row(b, 0) : nullptr);
  });
  for (int b = 0; b < x.batch; ++b) {
    const double* gw = scratch.data() + static_cast<std::size_t>(b) * weights_.size();
    for (std::size_t i = 0; i < weights_.size(); ++i) grad_params[i] += gw[i];
  }
  return grad_x;
}

std::vector<std::int64_t> CosineConvLayer::config_ints() const {
  return {filters_, filter_len_, stride_, static_cast<std::int64_t>(mode_)};
}

std::unique_ptr<Layer> CosineConvLayer::clone() const {
  return std::make_unique<CosineConvLayer>(*this);
}

Matrix CosineConvLayer::weight_matrix() const {
  Matrix w(filters_, filter_len_);
  w.v = weights_;
  return w;
}

void CosineConvLayer::set_weight_matrix(const Matrix& w) {
  require(w.rows == filters_ && w.cols == filter_len_, errc::shape_mismatch,
          "weight matrix shape mismatch in " + describe());
  weights_ = w.v;
}

// --------------------------------------------------------------- MaxPoolLayer

MaxPoolLayer::MaxPoolLayer(int window) : window_(window) {
  require(window >= 1, errc::invalid_config, "pool window must be >= 1");
}

std::string MaxPoolLayer::describe() const {
  return "max_pool(w" + std::to_string(window_) + ")";
}

ActShape MaxPoolLayer::out_shape(ActShape in) const {
  const int out_len = in.second / static_cast<int>(window_);
  require(out_len >= 1, errc::shape_mismatch,
          describe() + " input length " + std::to_string(in.second) + " shorter than window");
  return {in.first, out_len};
}

Tensor MaxPoolLayer::forward(const Tensor& x, std::vector<int>* argmax_out) const {
  const ActShape shape = out_shape({x.channels, x.length});
  const int out_len = shape.second;
  const int win = static_cast<int>(window_);
  Tensor out(x.batch, x.channels, out_len);
  if (argmax_out)
    argmax_out->assign(static_cast<std::size_t>(x.batch) * x.channels * out_len, 0);
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      const double* row = x.row(b, c);
      for (int i = 0; i < out_len; ++i) {
        int best = i * win;
        for (int j = i * win + 1; j < (i + 1) * win; ++j) {
          if (row[j] > row[best]) best = j;
        }
        out.at(b, c, i) = row[best];
        if (argmax_out)
          (*argmax_out)[(static_cast<std::size_t>(b) * x.channels + c) * out_len + i] = best;
      }
    }
  }
  return out;
}

Tensor MaxPoolLayer::backward(const Tensor& x, const std::vector<int>& argmax,
                              const Tensor& upstream, std::span<double>,
                              bool need_input_grad) const {
  if (!need_input_grad) return {};
  const ActShape shape = out_shape({x.channels, x.length});
  require(upstream.length == shape.second && upstream.channels == x.channels &&
              upstream.batch == x.batch,
          errc::shape_mismatch, "upstream shape mismatch in " + describe());
  require(argmax.size() == upstream.size(), errc::shape_mismatch,
          "argmax trace missing for max_pool backward");
  Tensor grad(x.batch, x.channels, x.length);
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      for (int i = 0; i < upstream.length; ++i) {
        const int src =
            argmax[(static_cast<std::size_t>(b) * x.channels + c) * upstream.length + i];
        grad.at(b, c, src) += upstream.at(b, c, i);
      }
    }
  }
  return grad;
}

// ------------------------------------------------------------ OneMaxPoolLayer

Tensor OneMaxPoolLayer::forward(const Tensor& x, std::vector<int>* argmax_out) const {
  OneMaxResult res = one_max_pool_forward(x);
  if (argmax_out) *argmax_out = std::move(res.argmax);
  return std::move(res.values);
}

Tensor OneMaxPoolLayer::backward(const Tensor& x, const std::vector<int>& argmax,
                                 const Tensor& upstream, std::span<double>,
                                 bool need_input_grad) const {
  if (!need_input_grad) return {};
  return one_max_pool_backward(argmax, upstream, x.length);
}

// ------------------------------------------------------------------ ReluLayer

Tensor ReluLayer::forward(const Tensor& x, std::vector<int>*) const {
  Tensor out = x;
  for (auto& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor ReluLayer::backward(const Tensor& x, const std::vector<int>&, const Tensor& upstream,
                           std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  require(upstream.same_shape(x), errc::shape_mismatch, "upstream shape mismatch in relu");
  Tensor grad(x.batch, x.channels, x.length);
  for (std::size_t i = 0; i < x.v.size(); ++i) grad.v[i] = x.v[i] > 0.0 ? upstream.v[i] : 0.0;
  return grad;
}

// ----------------------------------------------------------------- DenseLayer

DenseLayer::DenseLayer(int in_features, int out_features)
    : in_features_(in_features), out_features_(out_features),
      params_(static_cast<std::size_t>(out_features) * in_features + out_features, 0.0) {
  require(in_features >= 1 && out_features >= 1, errc::invalid_config,
          "bad dense configuration");
}

std::unique_ptr<DenseLayer> DenseLayer::random(int in_features, int out_features, Rng& rng) {
  auto layer = std::make_unique<DenseLayer>(in_features, out_features);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_features));
  for (int o = 0; o < out_features; ++o)
    for (int i = 0; i < in_features; ++i) layer->weight(o, i) = scale * rng.gaussian();
  // biases start at zero
  return layer;
}

std::string DenseLayer::describe() const {
  return "dense(" + std::to_string(in_features_) + "->" + std::to_string(out_features_) + ")";
}

ActShape DenseLayer::out_shape(ActShape in) const {
  require(in.first * in.second == in_features_, errc::shape_mismatch,
          describe() + " expects " + std::to_string(in_features_) + " features, got " +
              std::to_string(in.first * in.second));
  return {out_features_, 1};
}

Tensor DenseLayer::forward(const Tensor& x, std::vector<int>*) const {
  out_shape({x.channels, x.length});
  Tensor out(x.batch, out_features_, 1);
  for (int b = 0; b < x.batch; ++b) {
    const double* xb = x.row(b, 0);  // flattened (channels, length)
    for (int o = 0; o < out_features_; ++o) {
      const double* wo = params_.data() + static_cast<std::size_t>(o) * in_features_;
      double acc = bias(o);
      for (int i = 0; i < in_features_; ++i) acc += wo[i] * xb[i];
      out.at(b, o, 0) = acc;
    }
  }
  return out;
}

Tensor DenseLayer::backward(const Tensor& x, const std::vector<int>&, const Tensor& upstream,
                            std::span<double> grad_params, bool need_input_grad) const {
  out_shape({x.channels, x.length});
  require(upstream.batch == x.batch && upstream.channels == out_features_ && upstream.length == 1,
          errc::shape_mismatch, "upstream shape mismatch in " + describe());
  require(grad_params.size() == params_.size(), errc::shape_mismatch,
          "gradient buffer size mismatch");

  double* gw = grad_params.data();
  double* gb = grad_params.data() + static_cast<std::size_t>(out_features_) * in_features_;
  Tensor grad_x;
  if (need_input_grad) grad_x = Tensor(x.batch, x.channels, x.length);

  for (int b = 0; b < x.batch; ++b) {
    const double* xb = x.row(b, 0);
    double* gxb = need_input_grad ? grad_x.row(b, 0) : nullptr;
    for (int o = 0; o < out_features_; ++o) {
      const double u = upstream.at(b, o, 0);
      if (u == 0.0) continue;
      double* gwo = gw + static_cast<std::size_t>(o) * in_features_;
      const double* wo = params_.data() + static_cast<std::size_t>(o) * in_features_;
      for (int i = 0; i < in_features_; ++i) gwo[i] += u * xb[i];
      gb[o] += u;
      if (gxb) {
        for (int i = 0; i < in_features_; ++i) gxb[i] += u * wo[i];
      }
    }
  }
  return grad_x;
}

std::vector<std::int64_t> DenseLayer::config_ints() const { return {in_features_, out_features_}; }

std::unique_ptr<Layer> DenseLayer::clone() const { return std::make_unique<DenseLayer>(*this); }

// ------------------------------------------------------------- SoftmaxCELayer

Tensor SoftmaxCELayer::forward(const Tensor& x, std::vector<int>*) const { return x; }

Tensor SoftmaxCELayer::backward(const Tensor&, const std::vector<int>&, const Tensor& upstream,
                                std::span<double>, bool need_input_grad) const {
  return need_input_grad ? upstream : Tensor{};
}

// ------------------------------------------------------------------ softmax

Matrix softmax_rows(const Tensor& logits) {
  require(logits.length == 1, errc::shape_mismatch, "softmax expects (batch, classes, 1)");
  Matrix out(logits.batch, logits.channels);
  for (int b = 0; b < logits.batch; ++b) {
    double mx = logits.at(b, 0, 0);
    for (int c = 1; c < logits.channels; ++c) mx = std::max(mx, logits.at(b, c, 0));
    double sum = 0.0;
    for (int c = 0; c < logits.channels; ++c) {
      const double e = std::exp(logits.at(b, c, 0) - mx);
      out.at(b, c) = e;
      sum += e;
    }
    for (int c = 0; c < logits.channels; ++c) out.at(b, c) /= sum;
  }
  return out;
}

double softmax_ce_loss(const Tensor& logits, std::span<const int> labels, Tensor* dlogits) {
  require(logits.length == 1, errc::shape_mismatch, "loss expects (batch, classes, 1) logits");
  require(labels.size() == static_cast<std::size_t>(logits.batch), errc::shape_mismatch,
          "label count does not match batch");
  const int classes = logits.channels;
  if (dlogits) *dlogits = Tensor(logits.batch, classes, 1);

  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(logits.batch);
  for (int b = 0; b < logits.batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    require(y >= 0 && y < classes, errc::shape_mismatch, "label out of range");
    double mx = logits.at(b, 0, 0);
    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits.at(b, c, 0));
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += std::exp(logits.at(b, c, 0) - mx);
    const double log_z = mx + std::log(sum);
    total += log_z - logits.at(b, y, 0);
    if (dlogits) {
      for (int c = 0; c < classes; ++c) {
        const double p = std::exp(logits.at(b, c, 0) - log_z);
        dlogits->at(b, c, 0) = (p - (c == y ? 1.0 : 0.0)) * inv_batch;
      }
    }
  }
  return total * inv_batch;
}

}  // namespace somn
