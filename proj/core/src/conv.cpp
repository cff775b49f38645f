#include "somn/conv.hpp"

#include <algorithm>
#include <cmath>

#include "somn/error.hpp"

namespace somn {

int conv_output_length(int input_len, int filter_len, int stride) {
  require(stride >= 1, errc::invalid_config, "stride must be >= 1");
  require(input_len >= filter_len, errc::shape_mismatch,
          "input length " + std::to_string(input_len) + " shorter than filter length " +
              std::to_string(filter_len));
  return (input_len - filter_len) / stride + 1;
}

std::vector<double> window_norms(const double* x, int input_len, int filter_len, int stride) {
  const int out_len = conv_output_length(input_len, filter_len, stride);
  std::vector<double> norms(static_cast<std::size_t>(out_len));
  for (int i = 0; i < out_len; ++i) {
    const double* seg = x + static_cast<std::ptrdiff_t>(i) * stride;
    norms[static_cast<std::size_t>(i)] = std::sqrt(detail::conv_dot(seg, seg, filter_len));
  }
  return norms;
}

namespace {

using detail::conv_dot;

void check_single_channel(const Tensor& x) {
  require(x.channels == 1, errc::shape_mismatch,
          "filter-bank convolution expects a single input channel, got " +
              std::to_string(x.channels));
}

double row_norm(const Matrix& w, int k) {
  double s = 0.0;
  const double* row = w.row(k);
  for (int l = 0; l < w.cols; ++l) s += row[l] * row[l];
  return std::sqrt(s);
}

}  // namespace

namespace detail {

void correlate_axpy(const double* wk, int L, const double* x, double* out, int out_len) {
  // Stride-1 correlation as L vectorized passes: every output element is an
  // independent accumulator, so the compiler is free to use full-width SIMD.
  std::fill(out, out + out_len, 0.0);
  for (int l = 0; l < L; ++l) {
    const double c = wk[l];
    const double* xs = x + l;
    for (int i = 0; i < out_len; ++i) out[i] += c * xs[i];
  }
}

void dot_forward_1(const Matrix& w, int stride, const double* x, int input_len, double* out,
                   int out_len) {
  const int K = w.rows, L = w.cols;
  for (int k = 0; k < K; ++k) {
    const double* wk = w.row(k);
    double* ok = out + static_cast<std::ptrdiff_t>(k) * out_len;
    if (stride == 1) {
      correlate_axpy(wk, L, x, ok, out_len);
      continue;
    }
    for (int i = 0; i < out_len; ++i) {
      ok[i] = conv_dot(wk, x + static_cast<std::ptrdiff_t>(i) * stride, L);
    }
  }
  (void)input_len;
}

void dot_backward_1(const Matrix& w, int stride, const double* x, int input_len,
                    const double* upstream, int out_len, double* grad_w, double* grad_x) {
  const int K = w.rows, L = w.cols;
  for (int k = 0; k < K; ++k) {
    const double* uk = upstream + static_cast<std::ptrdiff_t>(k) * out_len;
    double* gw = grad_w + static_cast<std::ptrdiff_t>(k) * L;
    const double* wk = w.row(k);
    for (int i = 0; i < out_len; ++i) {
      const double u = uk[i];
      if (u == 0.0) continue;
      const double* seg = x + static_cast<std::ptrdiff_t>(i) * stride;
      for (int l = 0; l < L; ++l) gw[l] += u * seg[l];
      if (grad_x) {
        double* gx = grad_x + static_cast<std::ptrdiff_t>(i) * stride;
        for (int l = 0; l < L; ++l) gx[l] += u * wk[l];
      }
    }
  }
  (void)input_len;
}

void cos_forward_1(const Matrix& w, ConvMode mode, int stride, const double* x, int input_len,
                   double* out, int out_len) {
  const int K = w.rows, L = w.cols;
  const std::vector<double> norms = window_norms(x, input_len, L, stride);
  for (int k = 0; k < K; ++k) {
    const double* wk = w.row(k);
    double wn = 1.0;
    if (mode == ConvMode::cosine_full) {
      wn = row_norm(w, k);
      require(wn > kSegNormEps, errc::zero_filter,
              "filter " + std::to_string(k) + " has near-zero norm");
    }
    double* ok = out + static_cast<std::ptrdiff_t>(k) * out_len;
    if (stride == 1) {
      correlate_axpy(wk, L, x, ok, out_len);
      for (int i = 0; i < out_len; ++i) {
        const double denom = std::max(norms[static_cast<std::size_t>(i)], kSegNormEps);
        ok[i] = mode == ConvMode::cosine_full ? ok[i] / (wn * denom) : ok[i] / denom;
      }
      continue;
    }
    for (int i = 0; i < out_len; ++i) {
      const double acc = conv_dot(wk, x + static_cast<std::ptrdiff_t>(i) * stride, L);
      const double denom = std::max(norms[static_cast<std::size_t>(i)], kSegNormEps);
      ok[i] = mode == ConvMode::cosine_full ? acc / (wn * denom) : acc / denom;
    }
  }
}

void cos_backward_1(const Matrix& w, ConvMode mode, int stride, const double* x, int input_len,
                    const double* upstream, int out_len, double* grad_w, double* grad_x) {
  const int K = w.rows, L = w.cols;
  (void)input_len;
  // Norms are computed lazily: after 1-max routing the upstream is sparse, so
  // only a handful of windows are ever touched. The summation order matches
  // window_norms exactly.
  auto seg_norm = [L](const double* seg) {
    double s = 0.0;
    for (int l = 0; l < L; ++l) s += seg[l] * seg[l];
    return std::sqrt(s);
  };

  for (int k = 0; k < K; ++k) {
    const double* wk = w.row(k);
    const double* uk = upstream + static_cast<std::ptrdiff_t>(k) * out_len;
    double* gw = grad_w + static_cast<std::ptrdiff_t>(k) * L;

    if (mode == ConvMode::cosine_normalized) {
      for (int i = 0; i < out_len; ++i) {
        const double u = uk[i];
        if (u == 0.0) continue;
        const double* seg = x + static_cast<std::ptrdiff_t>(i) * stride;
        const double norm = seg_norm(seg);
        const double denom = std::max(norm, kSegNormEps);
        const double c = u / denom;
        for (int l = 0; l < L; ++l) gw[l] += c * seg[l];
        if (grad_x) {
          const double dot = conv_dot(wk, seg, L);
          double* gx = grad_x + static_cast<std::ptrdiff_t>(i) * stride;
          // d o/d x_l = w_l / denom - dot * seg_l / (denom^2 * norm); the
          // second term vanishes where the eps guard is active.
          const double q = norm > kSegNormEps ? dot / (denom * denom * norm) : 0.0;
          for (int l = 0; l < L; ++l) gx[l] += u * (wk[l] / denom - q * seg[l]);
        }
      }
    } else {
      const double wn = row_norm(w, k);
      require(wn > kSegNormEps, errc::zero_filter,
              "filter " + std::to_string(k) + " has near-zero norm");
      double radial = 0.0;  // sum_j u_j * o_j, peeled out of the second term
      for (int i = 0; i < out_len; ++i) {
        const double u = uk[i];
        if (u == 0.0) continue;
        const double* seg = x + static_cast<std::ptrdiff_t>(i) * stride;
        const double norm = seg_norm(seg);
        const double denom = std::max(norm, kSegNormEps);
        const double dot = conv_dot(wk, seg, L);
        const double o = dot / (wn * denom);
        const double c = u / (wn * denom);
        for (int l = 0; l < L; ++l) gw[l] += c * seg[l];
        radial += u * o;
        if (grad_x) {
          double* gx = grad_x + static_cast<std::ptrdiff_t>(i) * stride;
          const double q = norm > kSegNormEps ? dot / (wn * denom * denom * norm) : 0.0;
          for (int l = 0; l < L; ++l) gx[l] += u * (wk[l] / (wn * denom) - q * seg[l]);
        }
      }
      const double scale = radial / (wn * wn);
      for (int l = 0; l < L; ++l) gw[l] -= scale * wk[l];
    }
  }
}

}  // namespace detail

Tensor conv1d_forward(const ConvFilter& filter, const Tensor& x) {
  require(filter.mode == ConvMode::dot, errc::invalid_config,
          "conv1d_forward expects a dot-mode filter");
  check_single_channel(x);
  const int out_len = conv_output_length(x.length, filter.weights.cols, filter.stride);
  Tensor out(x.batch, filter.weights.rows, out_len);
  for (int b = 0; b < x.batch; ++b) {
    detail::dot_forward_1(filter.weights, filter.stride, x.row(b, 0), x.length, out.row(b, 0),
                          out_len);
  }
  return out;
}

ConvGrads conv1d_backward(const ConvFilter& filter, const Tensor& x, const Tensor& upstream) {
  require(filter.mode == ConvMode::dot, errc::invalid_config,
          "conv1d_backward expects a dot-mode filter");
  check_single_channel(x);
  const int out_len = conv_output_length(x.length, filter.weights.cols, filter.stride);
  require(upstream.batch == x.batch && upstream.channels == filter.weights.rows &&
              upstream.length == out_len,
          errc::shape_mismatch, "upstream shape does not match convolution output");

  ConvGrads g;
  g.grad_w = Matrix(filter.weights.rows, filter.weights.cols);
  g.grad_x = Tensor(x.batch, 1, x.length);
  for (int b = 0; b < x.batch; ++b) {
    detail::dot_backward_1(filter.weights, filter.stride, x.row(b, 0), x.length,
                           upstream.row(b, 0), out_len, g.grad_w.v.data(), g.grad_x.row(b, 0));
  }
  return g;
}

Tensor cosine_conv_forward(const ConvFilter& filter, const Tensor& x) {
  require(filter.mode != ConvMode::dot, errc::invalid_config,
          "cosine_conv_forward expects a cosine-mode filter");
  check_single_channel(x);
  const int out_len = conv_output_length(x.length, filter.weights.cols, filter.stride);
  Tensor out(x.batch, filter.weights.rows, out_len);
  for (int b = 0; b < x.batch; ++b) {
    detail::cos_forward_1(filter.weights, filter.mode, filter.stride, x.row(b, 0), x.length,
                          out.row(b, 0), out_len);
  }
  return out;
}

ConvGrads cosine_conv_backward(const ConvFilter& filter, const Tensor& x,
                               const Tensor& upstream) {
  require(filter.mode != ConvMode::dot, errc::invalid_config,
          "cosine_conv_backward expects a cosine-mode filter");
  check_single_channel(x);
  const int out_len = conv_output_length(x.length, filter.weights.cols, filter.stride);
  require(upstream.batch == x.batch && upstream.channels == filter.weights.rows &&
              upstream.length == out_len,
          errc::shape_mismatch, "upstream shape does not match convolution output");

  ConvGrads g;
  g.grad_w = Matrix(filter.weights.rows, filter.weights.cols);
  g.grad_x = Tensor(x.batch, 1, x.length);
  for (int b = 0; b < x.batch; ++b) {
    detail::cos_backward_1(filter.weights, filter.mode, filter.stride, x.row(b, 0), x.length,
                           upstream.row(b, 0), out_len, g.grad_w.v.data(), g.grad_x.row(b, 0));
  }
  return g;
}

OneMaxResult one_max_pool_forward(const Tensor& o) {
  require(o.length >= 1, errc::shape_mismatch, "1-max pooling of empty sequence");
  OneMaxResult res;
  res.values = Tensor(o.batch, o.channels, 1);
  res.argmax.resize(static_cast<std::size_t>(o.batch) * o.channels);
  for (int b = 0; b < o.batch; ++b) {
    for (int c = 0; c < o.channels; ++c) {
      const double* row = o.row(b, c);
      int best = 0;
      for (int i = 1; i < o.length; ++i) {
        if (row[i] > row[best]) best = i;
      }
      res.values.at(b, c, 0) = row[best];
      res.argmax[static_cast<std::size_t>(b) * o.channels + c] = best;
    }
  }
  return res;
}

Tensor one_max_pool_backward(const std::vector<int>& argmax, const Tensor& upstream,
                             int input_length) {
  require(upstream.length == 1, errc::shape_mismatch, "upstream of 1-max pool must have length 1");
  require(argmax.size() == static_cast<std::size_t>(upstream.batch) * upstream.channels,
          errc::shape_mismatch, "argmax count does not match upstream");
  Tensor grad(upstream.batch, upstream.channels, input_length);
  for (int b = 0; b < upstream.batch; ++b) {
    for (int c = 0; c < upstream.channels; ++c) {
      const int idx = argmax[static_cast<std::size_t>(b) * upstream.channels + c];
      require(idx >= 0 && idx < input_length, errc::shape_mismatch, "argmax out of range");
      grad.at(b, c, idx) = upstream.at(b, c, 0);
    }
  }
  return grad;
}

}  // namespace somn
