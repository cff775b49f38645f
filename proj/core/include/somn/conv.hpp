#pragma once

#include <span>
#include <vector>

#include "somn/tensor.hpp"

namespace somn {

// Guard on window norms: cosine denominators use max(|segment|, kSegNormEps).
inline constexpr double kSegNormEps = 1e-8;

enum class ConvMode {
  dot,                // plain convolution, o_i = w . x[i : i+L-1]
  cosine_full,        // o_i = (w . seg) / (|w| max(|seg|, eps))
  cosine_normalized,  // o_i = (w . seg) / max(|seg|, eps); |w| kept at 1 externally
};

// A bank of K single-input-channel filters of length L.
struct ConvFilter {
  Matrix weights;  // K x L
  int stride = 1;
  ConvMode mode = ConvMode::dot;
};

int conv_output_length(int input_len, int filter_len, int stride);

struct ConvGrads {
  Matrix grad_w;  // K x L
  Tensor grad_x;  // same shape as the input
};

// Valid-padding dot-product convolution over a (batch, 1, length) tensor.
Tensor conv1d_forward(const ConvFilter& filter, const Tensor& x);

// grad_w[k] = sum_i upstream[k,i] * x[i*stride : i*stride+L-1];
// grad_x by transposed accumulation.
ConvGrads conv1d_backward(const ConvFilter& filter, const Tensor& x, const Tensor& upstream);

// Cosine-similarity convolution. In cosine_full mode the denominator carries
// |w|; in cosine_normalized mode the filter rows are assumed unit norm and
// only the segment norm divides the dot product.
Tensor cosine_conv_forward(const ConvFilter& filter, const Tensor& x);

// cosine_full differentiates the full quotient (including the |w| terms);
// cosine_normalized uses the simplified gradient
//   dE/dw_i = sum_j u_j * seg_j[i] / max(|seg_j|, eps),
// which is exact for the normalized forward expression. grad_x differentiates
// the same forward expression with respect to the input in both modes.
ConvGrads cosine_conv_backward(const ConvFilter& filter, const Tensor& x, const Tensor& upstream);

struct OneMaxResult {
  Tensor values;            // (batch, channels, 1)
  std::vector<int> argmax;  // flattened per (batch, channel), lowest-index ties
};

OneMaxResult one_max_pool_forward(const Tensor& o);

// Routes each upstream value to its argmax position; everything else is zero.
Tensor one_max_pool_backward(const std::vector<int>& argmax, const Tensor& upstream,
                             int input_length);

// Norm of each stride-spaced window, shared by forward and backward passes.
// Computed by direct per-window summation in index order.
std::vector<double> window_norms(const double* x, int input_len, int filter_len, int stride);

namespace detail {

// Four-lane dot product. The fixed accumulation pattern keeps results
// deterministic while letting the FMA units pipeline.
inline double conv_dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Per-sample kernels behind the batched entry points above; layers call these
// directly inside data-parallel loops. grad_w accumulates (callers reduce
// per-sample buffers in index order), grad_x may be null.
void dot_forward_1(const Matrix& w, int stride, const double* x, int input_len, double* out,
                   int out_len);
void dot_backward_1(const Matrix& w, int stride, const double* x, int input_len,
                    const double* upstream, int out_len, double* grad_w, double* grad_x);
void cos_forward_1(const Matrix& w, ConvMode mode, int stride, const double* x, int input_len,
                   double* out, int out_len);
void cos_backward_1(const Matrix& w, ConvMode mode, int stride, const double* x, int input_len,
                    const double* upstream, int out_len, double* grad_w, double* grad_x);

}  // namespace detail

}  // namespace somn
