#include <cmath>
#include <functional>

#include "doctest.h"
#include "somn/conv.hpp"
#include "somn/error.hpp"
#include "somn/rng.hpp"

using namespace somn;

namespace {

Tensor make_input(Rng& rng, int batch, int len, double scale = 1.0) {
  Tensor x(batch, 1, len);
  for (auto& v : x.v) v = scale * rng.gaussian();
  return x;
}

ConvFilter make_filter(Rng& rng, int k, int l, int stride, ConvMode mode, bool unit_rows) {
  ConvFilter f;
  f.weights = Matrix(k, l);
  f.stride = stride;
  f.mode = mode;
  for (auto& v : f.weights.v) v = rng.gaussian();
  if (unit_rows) {
    for (int r = 0; r < k; ++r) {
      double n2 = 0.0;
      for (int c = 0; c < l; ++c) n2 += f.weights.at(r, c) * f.weights.at(r, c);
      const double inv = 1.0 / std::sqrt(n2);
      for (int c = 0; c < l; ++c) f.weights.at(r, c) *= inv;
    }
  }
  return f;
}

// Central-difference gradient of a scalar function of one perturbed value.
double central_diff(const std::function<double()>& eval, double& slot, double eps) {
  const double saved = slot;
  slot = saved + eps;
  const double plus = eval();
  slot = saved - eps;
  const double minus = eval();
  slot = saved;
  return (plus - minus) / (2.0 * eps);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Scalar objective sum_bki u[b,k,i] * o[b,k,i] with fixed random u.
double weighted_sum(const Tensor& o, const Tensor& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < o.v.size(); ++i) s += o.v[i] * u.v[i];
  return s;
}

}  // namespace

TEST_CASE("conv1d_forward hand cases") {
  SUBCASE("w=[1,0], x=[3,5,7] -> [3,5]") {
    ConvFilter f;
    f.weights = Matrix(1, 2);
    f.weights.at(0, 0) = 1.0;
    f.weights.at(0, 1) = 0.0;
    Tensor x(1, 1, 3);
    x.v = {3, 5, 7};
    const Tensor o = conv1d_forward(f, x);
    REQUIRE(o.length == 2);
    CHECK(o.at(0, 0, 0) == 3.0);
    CHECK(o.at(0, 0, 1) == 5.0);
  }
  SUBCASE("zero filter gives zero output") {
    Rng rng(1);
    ConvFilter f = make_filter(rng, 3, 5, 1, ConvMode::dot, false);
    std::fill(f.weights.v.begin(), f.weights.v.end(), 0.0);
    const Tensor o = conv1d_forward(f, make_input(rng, 2, 20));
    for (double v : o.v) CHECK(v == 0.0);
  }
  SUBCASE("boundary stride yields a single output") {
    Rng rng(2);
    ConvFilter f = make_filter(rng, 1, 4, 17 - 4 + 1, ConvMode::dot, false);
    const Tensor o = conv1d_forward(f, make_input(rng, 1, 17));
    CHECK(o.length == 1);
  }
}

TEST_CASE("conv1d_backward matches the summed-segment formula and finite differences") {
  Rng rng(3);

  SUBCASE("zero upstream -> zero grads") {
    ConvFilter f = make_filter(rng, 2, 3, 1, ConvMode::dot, false);
    Tensor x = make_input(rng, 1, 12);
    Tensor u(1, 2, 10);
    const auto g = conv1d_backward(f, x, u);
    for (double v : g.grad_w.v) CHECK(v == 0.0);
    for (double v : g.grad_x.v) CHECK(v == 0.0);
  }

  SUBCASE("single output position: grad_w equals the input segment") {
    ConvFilter f = make_filter(rng, 1, 4, 1, ConvMode::dot, false);
    Tensor x = make_input(rng, 1, 4);
    Tensor u(1, 1, 1);
    u.at(0, 0, 0) = 1.0;
    const auto g = conv1d_backward(f, x, u);
    for (int l = 0; l < 4; ++l) CHECK(g.grad_w.at(0, l) == x.at(0, 0, l));
  }

  SUBCASE("random cases match finite differences") {
    for (int trial = 0; trial < 20; ++trial) {
      const int k = 1 + static_cast<int>(rng.uniform_int(0, 2));
      const int l = 2 + static_cast<int>(rng.uniform_int(0, 4));
      const int stride = 1 + static_cast<int>(rng.uniform_int(0, 2));
      const int len = l + stride * static_cast<int>(rng.uniform_int(1, 6));
      ConvFilter f = make_filter(rng, k, l, stride, ConvMode::dot, false);
      Tensor x = make_input(rng, 2, len);
      Tensor u(2, k, conv_output_length(len, l, stride));
      for (auto& v : u.v) v = rng.gaussian();

      const auto g = conv1d_backward(f, x, u);
      auto eval = [&] { return weighted_sum(conv1d_forward(f, x), u); };

      for (std::size_t p = 0; p < f.weights.v.size(); ++p) {
        const double numeric = central_diff(eval, f.weights.v[p], 1e-5);
        CHECK(rel_err(g.grad_w.v[p], numeric) <= 1e-6);
      }
      for (std::size_t p = 0; p < x.v.size(); p += 3) {
        const double numeric = central_diff(eval, x.v[p], 1e-5);
        CHECK(rel_err(g.grad_x.v[p], numeric) <= 1e-6);
      }
    }
  }
}

TEST_CASE("cosine_conv_forward hand cases") {
  ConvFilter f;
  f.weights = Matrix(1, 2);
  const double r = 1.0 / std::sqrt(2.0);
  f.weights.at(0, 0) = r;
  f.weights.at(0, 1) = r;
  f.mode = ConvMode::cosine_normalized;

  Tensor x(1, 1, 2);
  SUBCASE("parallel vectors -> 1") {
    x.v = {2, 2};
    CHECK(cosine_conv_forward(f, x).at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal vectors -> 0") {
    x.v = {1, -1};
    CHECK(cosine_conv_forward(f, x).at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("[3,0] -> 1/sqrt(2)") {
    x.v = {3, 0};
    CHECK(cosine_conv_forward(f, x).at(0, 0, 0) == doctest::Approx(r).epsilon(1e-9));
  }
  SUBCASE("cosine_full agrees for non-unit filters") {
    ConvFilter g = f;
    g.mode = ConvMode::cosine_full;
    for (auto& v : g.weights.v) v *= 7.5;  // scale must not matter in full mode
    x.v = {3, 0};
    CHECK(cosine_conv_forward(g, x).at(0, 0, 0) == doctest::Approx(r).epsilon(1e-9));
  }
}

TEST_CASE("cosine_full backward matches finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int l = 2 + static_cast<int>(rng.uniform_int(0, 4));
    const int stride = 1 + static_cast<int>(rng.uniform_int(0, 1));
    const int len = l + stride * static_cast<int>(rng.uniform_int(1, 6));
    ConvFilter f = make_filter(rng, k, l, stride, ConvMode::cosine_full, false);
    Tensor x = make_input(rng, 2, len);
    Tensor u(2, k, conv_output_length(len, l, stride));
    for (auto& v : u.v) v = rng.gaussian();

    const auto g = cosine_conv_backward(f, x, u);
    auto eval = [&] { return weighted_sum(cosine_conv_forward(f, x), u); };

    for (std::size_t p = 0; p < f.weights.v.size(); ++p) {
      const double numeric = central_diff(eval, f.weights.v[p], 1e-6);
      CHECK(rel_err(g.grad_w.v[p], numeric) <= 1e-5);
    }
    for (std::size_t p = 0; p < x.v.size(); p += 2) {
      const double numeric = central_diff(eval, x.v[p], 1e-6);
      CHECK(rel_err(g.grad_x.v[p], numeric) <= 1e-5);
    }
  }
}

TEST_CASE("cosine_normalized backward matches finite differences of its forward") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2, l = 5, stride = 1, len = 16;
    ConvFilter f = make_filter(rng, k, l, stride, ConvMode::cosine_normalized, true);
    Tensor x = make_input(rng, 1, len);
    Tensor u(1, k, conv_output_length(len, l, stride));
    for (auto& v : u.v) v = rng.gaussian();

    const auto g = cosine_conv_backward(f, x, u);
    auto eval = [&] { return weighted_sum(cosine_conv_forward(f, x), u); };

    for (std::size_t p = 0; p < f.weights.v.size(); ++p) {
      const double numeric = central_diff(eval, f.weights.v[p], 1e-6);
      CHECK(rel_err(g.grad_w.v[p], numeric) <= 1e-5);
    }
    for (std::size_t p = 0; p < x.v.size(); ++p) {
      const double numeric = central_diff(eval, x.v[p], 1e-6);
      CHECK(rel_err(g.grad_x.v[p], numeric) <= 1e-5);
    }
  }
}

TEST_CASE("zero upstream -> zero grads in both cosine modes") {
  Rng rng(7);
  for (ConvMode mode : {ConvMode::cosine_full, ConvMode::cosine_normalized}) {
    ConvFilter f = make_filter(rng, 2, 4, 1, mode, mode == ConvMode::cosine_normalized);
    Tensor x = make_input(rng, 1, 10);
    Tensor u(1, 2, 7);
    const auto g = cosine_conv_backward(f, x, u);
    for (double v : g.grad_w.v) CHECK(v == 0.0);
    for (double v : g.grad_x.v) CHECK(v == 0.0);
  }
}

TEST_CASE("after projection, normalized and full updates coincide to first order") {
  // For unit-norm w the full gradient differs from the simplified one by a
  // radial component only; projecting both updates back onto the sphere must
  // agree up to O(lr^2).
  Rng rng(8);
  const double lr = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 3, l = 6, len = 24;
    ConvFilter fn = make_filter(rng, k, l, 1, ConvMode::cosine_normalized, true);
    ConvFilter ff = fn;
    ff.mode = ConvMode::cosine_full;
    Tensor x = make_input(rng, 1, len);
    Tensor u(1, k, conv_output_length(len, l, 1));
    for (auto& v : u.v) v = rng.gaussian();

    const auto gn = cosine_conv_backward(fn, x, u);
    const auto gf = cosine_conv_backward(ff, x, u);

    for (int r = 0; r < k; ++r) {
      std::vector<double> wn(l), wf(l);
      double n2 = 0.0, f2 = 0.0;
      for (int c = 0; c < l; ++c) {
        wn[static_cast<std::size_t>(c)] = fn.weights.at(r, c) - lr * gn.grad_w.at(r, c);
        wf[static_cast<std::size_t>(c)] = ff.weights.at(r, c) - lr * gf.grad_w.at(r, c);
        n2 += wn[static_cast<std::size_t>(c)] * wn[static_cast<std::size_t>(c)];
        f2 += wf[static_cast<std::size_t>(c)] * wf[static_cast<std::size_t>(c)];
      }
      for (int c = 0; c < l; ++c) {
        const double a = wn[static_cast<std::size_t>(c)] / std::sqrt(n2);
        const double b = wf[static_cast<std::size_t>(c)] / std::sqrt(f2);
        CHECK(std::abs(a - b) <= 1e-6);
      }
    }
  }
}

TEST_CASE("1-max pooling forward and backward") {
  SUBCASE("[0.1, 0.9, 0.3] -> (0.9, index 1)") {
    Tensor o(1, 1, 3);
    o.v = {0.1, 0.9, 0.3};
    const auto r = one_max_pool_forward(o);
    CHECK(r.values.at(0, 0, 0) == 0.9);
    CHECK(r.argmax[0] == 1);
  }
  SUBCASE("ties break to the lowest index") {
    Tensor o(1, 1, 2);
    o.v = {0.5, 0.5};
    const auto r = one_max_pool_forward(o);
    CHECK(r.values.at(0, 0, 0) == 0.5);
    CHECK(r.argmax[0] == 0);
  }
  SUBCASE("length-1 input is its own maximum") {
    Tensor o(1, 2, 1);
    o.v = {3.0, -4.0};
    const auto r = one_max_pool_forward(o);
    CHECK(r.values.at(0, 1, 0) == -4.0);
    CHECK(r.argmax[1] == 0);
  }
  SUBCASE("backward routes upstream to the argmax only") {
    Tensor u(1, 1, 1);
    u.at(0, 0, 0) = 1.0;
    const auto grad = one_max_pool_backward({1}, u, 3);
    CHECK(grad.at(0, 0, 0) == 0.0);
    CHECK(grad.at(0, 0, 1) == 1.0);
    CHECK(grad.at(0, 0, 2) == 0.0);
  }
  SUBCASE("zero upstream gives a zero tensor") {
    Tensor u(1, 1, 1);
    const auto grad = one_max_pool_backward({2}, u, 5);
    for (double v : grad.v) CHECK(v == 0.0);
  }
}

TEST_CASE("combined 1-max + cosine_normalized gradient is u * seg / |seg| exactly") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 4, l = 8, len = 40;
    ConvFilter f = make_filter(rng, k, l, 1, ConvMode::cosine_normalized, true);
    Tensor x = make_input(rng, 3, len);

    const Tensor o = cosine_conv_forward(f, x);
    const auto pooled = one_max_pool_forward(o);
    Tensor pooled_upstream(x.batch, k, 1);
    for (auto& v : pooled_upstream.v) v = rng.gaussian();
    const Tensor routed = one_max_pool_backward(pooled.argmax, pooled_upstream, o.length);

    // Exactly one nonzero window per (batch, filter).
    for (int b = 0; b < x.batch; ++b) {
      for (int kk = 0; kk < k; ++kk) {
        int nonzero = 0;
        for (int i = 0; i < routed.length; ++i)
          if (routed.at(b, kk, i) != 0.0) ++nonzero;
        CHECK(nonzero == 1);
      }
    }

    const auto g = cosine_conv_backward(f, x, routed);

    // Independent oracle: same arithmetic order as the documented backward.
    Matrix expect(k, l);
    for (int b = 0; b < x.batch; ++b) {
      for (int kk = 0; kk < k; ++kk) {
        const int jstar = pooled.argmax[static_cast<std::size_t>(b) * k + kk];
        const double* seg = x.row(b, 0) + jstar;
        double norm2 = 0.0;
        for (int i = 0; i < l; ++i) norm2 += seg[i] * seg[i];
        const double denom = std::max(std::sqrt(norm2), kSegNormEps);
        const double c = pooled_upstream.at(b, kk, 0) / denom;
        for (int i = 0; i < l; ++i) expect.at(kk, i) += c * seg[i];
      }
    }
    for (std::size_t p = 0; p < expect.v.size(); ++p) CHECK(g.grad_w.v[p] == expect.v[p]);
  }
}

TEST_CASE("cosine outputs are invariant to segment amplitude") {
  Rng rng(10);
  int tested = 0;
  while (tested < 1000) {
    const int l = 4 + static_cast<int>(rng.uniform_int(0, 12));
    ConvFilter f = make_filter(rng, 1, l, 1, ConvMode::cosine_normalized, true);
    Tensor x = make_input(rng, 1, l);
    double n2 = 0.0;
    for (double v : x.v) n2 += v * v;
    if (std::sqrt(n2) < 1e-3) continue;

    const double base = cosine_conv_forward(f, x).at(0, 0, 0);
    for (const double c : {0.1, 0.5, 2.0, 10.0}) {
      Tensor xs = x;
      for (auto& v : xs.v) v *= c;
      CHECK(std::abs(cosine_conv_forward(f, xs).at(0, 0, 0) - base) <= 1e-9);
    }
    ++tested;
  }
}

TEST_CASE("1-max argmax over cosine outputs is invariant to input scaling") {
  Rng rng(11);
  ConvFilter f = make_filter(rng, 6, 25, 1, ConvMode::cosine_normalized, true);
  Tensor x = make_input(rng, 1, 500);
  const auto base = one_max_pool_forward(cosine_conv_forward(f, x));
  for (const double c : {0.1, 0.5, 2.0, 10.0}) {
    Tensor xs = x;
    for (auto& v : xs.v) v *= c;
    const auto scaled = one_max_pool_forward(cosine_conv_forward(f, xs));
    CHECK(scaled.argmax == base.argmax);
    for (std::size_t i = 0; i < base.values.v.size(); ++i)
      CHECK(std::abs(scaled.values.v[i] - base.values.v[i]) <= 1e-9);
  }
}

TEST_CASE("zero filter raises ZeroFilter in cosine_full mode") {
  ConvFilter f;
  f.weights = Matrix(1, 3);
  f.mode = ConvMode::cosine_full;
  Tensor x(1, 1, 5);
  x.v = {1, 2, 3, 4, 5};
  try {
    cosine_conv_forward(f, x);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::zero_filter);
  }
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(12);
  ConvFilter f = make_filter(rng, 1, 8, 1, ConvMode::dot, false);
  Tensor x = make_input(rng, 1, 5);  // shorter than the filter
  CHECK_THROWS_AS(conv1d_forward(f, x), Error);

  Tensor x2(1, 2, 16);  // two channels
  CHECK_THROWS_AS(conv1d_forward(f, x2), Error);
}
