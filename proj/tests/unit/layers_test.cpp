#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "respkit/core/rng.hpp"
#include "respkit/nn/layers.hpp"
#include "testutil.hpp"

using namespace respkit;
using namespace respkit::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<size_t> shape, Pcg32& rng, double lo = -1.0,
                        double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.storage()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Direct nested-summation convolution, written independently of the im2col
// path.
Tensor<double> conv_reference(const Tensor<double>& x, const Tensor<double>& w,
                              const Tensor<double>& b, size_t stride, Padding pad) {
  const size_t h = x.extent(0), wd = x.extent(1), cin = x.extent(2);
  const size_t k = w.extent(0), f = w.extent(3);
  size_t oh, ow;
  long long pt = 0, pl = 0;
  if (pad == Padding::valid) {
    oh = (h - k) / stride + 1;
    ow = (wd - k) / stride + 1;
  } else {
    oh = (h + stride - 1) / stride;
    ow = (wd + stride - 1) / stride;
    pt = std::max<long long>(0, static_cast<long long>((oh - 1) * stride + k) -
                                    static_cast<long long>(h)) /
         2;
    pl = std::max<long long>(0, static_cast<long long>((ow - 1) * stride + k) -
                                    static_cast<long long>(wd)) /
         2;
  }
  Tensor<double> out({oh, ow, f});
  for (size_t oy = 0; oy < oh; ++oy) {
    for (size_t ox = 0; ox < ow; ++ox) {
      for (size_t ch = 0; ch < f; ++ch) {
        double acc = b[ch];
        for (size_t dy = 0; dy < k; ++dy) {
          for (size_t dx = 0; dx < k; ++dx) {
            const long long iy = static_cast<long long>(oy * stride + dy) - pt;
            const long long ix = static_cast<long long>(ox * stride + dx) - pl;
            if (iy < 0 || iy >= static_cast<long long>(h) || ix < 0 ||
                ix >= static_cast<long long>(wd)) {
              continue;
            }
            for (size_t ci = 0; ci < cin; ++ci) {
              acc += x.at(static_cast<size_t>(iy), static_cast<size_t>(ix), ci) *
                     w.at(dy, dx, ci, ch);
            }
          }
        }
        out.at(oy, ox, ch) = acc;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("convolution output shape follows the valid-padding arithmetic") {
  Pcg32 rng(1, 1);
  const auto x = random_tensor<float>({40, 62, 1}, rng);
  const auto w = random_tensor<float>({2, 2, 1, 16}, rng);
  const Tensor<float> b({16});
  const auto out = conv2d_forward(x, w, b);
  CHECK(out.extent(0) == 39);
  CHECK(out.extent(1) == 61);
  CHECK(out.extent(2) == 16);
}

TEST_CASE("a 1x1 convolution is an affine map") {
  Tensor<double> x({1, 1, 1});
  x[0] = 3.0;
  Tensor<double> w({1, 1, 1, 1});
  w[0] = 2.5;
  Tensor<double> b({1});
  b[0] = -1.0;
  const auto out = conv2d_forward(x, w, b);
  CHECK(out.size() == 1);
  CHECK(out[0] == Catch::Approx(2.5 * 3.0 - 1.0));
}

TEST_CASE("convolution matches a direct-summation reference on random tensors") {
  Pcg32 rng(2, 7);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t h = 3 + rng.bounded(8);
    const size_t wd = 3 + rng.bounded(8);
    const size_t cin = 1 + rng.bounded(3);
    const size_t k = 1 + rng.bounded(3);
    const size_t f = 1 + rng.bounded(5);
    const size_t stride = 1 + rng.bounded(2);
    const Padding pad = rng.bounded(2) ? Padding::same : Padding::valid;
    if (pad == Padding::valid && (h < k || wd < k)) continue;

    const auto x = random_tensor<double>({h, wd, cin}, rng);
    const auto w = random_tensor<double>({k, k, cin, f}, rng);
    const auto b = random_tensor<double>({f}, rng);
    const auto got = conv2d_forward(x, w, b, stride, pad);
    const auto want = conv_reference(x, w, b, stride, pad);
    REQUIRE(got.same_shape(want));
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == Catch::Approx(want[i]).margin(1e-5));
    }
  }
}

TEST_CASE("convolution is linear in its input when bias is zero") {
  Pcg32 rng(3, 7);
  const auto x = random_tensor<double>({6, 9, 2}, rng);
  const auto w = random_tensor<double>({2, 2, 2, 4}, rng);
  const Tensor<double> b({4});
  const double a = 3.7;
  Tensor<double> ax = x;
  for (auto& v : ax.storage()) v *= a;
  const auto lhs = conv2d_forward(ax, w, b);
  auto rhs = conv2d_forward(x, w, b);
  for (auto& v : rhs.storage()) v *= a;
  for (size_t i = 0; i < lhs.size(); ++i) {
    CHECK(lhs[i] == Catch::Approx(rhs[i]).margin(1e-5));
  }
}

TEST_CASE("convolution rejects mismatched shapes") {
  Pcg32 rng(4, 7);
  const auto x = random_tensor<float>({5, 5, 2}, rng);
  const auto w_bad_c = random_tensor<float>({2, 2, 3, 4}, rng);
  const Tensor<float> b4({4});
  CHECK_THROWS_AS(conv2d_forward(x, w_bad_c, b4), Error);
  const auto w = random_tensor<float>({2, 2, 2, 4}, rng);
  const Tensor<float> b_bad({5});
  CHECK_THROWS_AS(conv2d_forward(x, w, b_bad), Error);
  const auto w_big = random_tensor<float>({7, 7, 2, 4}, rng);
  const Tensor<float> b4b({4});
  CHECK_THROWS_AS(conv2d_forward(x, w_big, b4b), Error);
}

TEST_CASE("2x2 max pooling keeps the maximum") {
  Tensor<float> x({2, 2, 1});
  x[0] = 1;
  x[1] = 2;
  x[2] = 3;
  x[3] = 4;
  const auto res = maxpool_forward(x, 2);
  CHECK(res.out.size() == 1);
  CHECK(res.out[0] == 4.0f);
  CHECK(res.argmax[0] == 3);
}

TEST_CASE("pooling drops remainder rows and columns") {
  Pcg32 rng(5, 7);
  const auto x = random_tensor<float>({40, 862, 3}, rng);
  const auto res = maxpool_forward(x, 3);
  CHECK(res.out.extent(0) == 13);
  CHECK(res.out.extent(1) == 287);
  CHECK(res.out.extent(2) == 3);
}

TEST_CASE("pooling equals a brute-force region maximum") {
  Pcg32 rng(6, 7);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t h = 2 + rng.bounded(9);
    const size_t w = 2 + rng.bounded(9);
    const size_t c = 1 + rng.bounded(4);
    const size_t pool = 2 + rng.bounded(2);
    if (h < pool || w < pool) continue;
    const auto x = random_tensor<float>({h, w, c}, rng);
    const auto res = maxpool_forward(x, pool);
    for (size_t oy = 0; oy < res.out.extent(0); ++oy) {
      for (size_t ox = 0; ox < res.out.extent(1); ++ox) {
        for (size_t ch = 0; ch < c; ++ch) {
          float best = x.at(oy * pool, ox * pool, ch);
          for (size_t dy = 0; dy < pool; ++dy) {
            for (size_t dx = 0; dx < pool; ++dx) {
              best = std::max(best, x.at(oy * pool + dy, ox * pool + dx, ch));
            }
          }
          CHECK(res.out.at(oy, ox, ch) == best);  // exact, no tolerance
        }
      }
    }
  }
}

TEST_CASE("pool backward routes gradient to the argmax only") {
  Tensor<float> x({2, 4, 1});
  for (size_t i = 0; i < 8; ++i) x[i] = static_cast<float>(i);
  const auto res = maxpool_forward(x, 2);
  Tensor<float> gout({1, 2, 1});
  gout[0] = 2.0f;
  gout[1] = 5.0f;
  const auto gin = maxpool_backward(x.shape(), res.argmax, gout);
  CHECK(gin.at(1, 1, 0) == 2.0f);  // max of left region is index 5
  CHECK(gin.at(1, 3, 0) == 5.0f);  // max of right region is index 7
  float total = 0;
  for (auto v : gin.storage()) total += v;
  CHECK(total == 7.0f);
}

TEST_CASE("relu clamps negatives and gates the gradient") {
  Tensor<float> x({4});
  x[0] = -2;
  x[1] = 0;
  x[2] = 0.5f;
  x[3] = 3;
  const auto out = relu_forward(x);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 0.0f);
  CHECK(out[2] == 0.5f);
  CHECK(out[3] == 3.0f);
  Tensor<float> g({4}, 1.0f);
  const auto gin = relu_backward(x, g);
  CHECK(gin[0] == 0.0f);
  CHECK(gin[1] == 0.0f);  // gradient at exactly zero is zero
  CHECK(gin[2] == 1.0f);
  CHECK(gin[3] == 1.0f);
}

TEST_CASE("dropout is the identity in eval mode and at rate zero") {
  Pcg32 rng(8, 7);
  const auto x = random_tensor<float>({30, 30, 2}, rng);
  Pcg32 mask_rng(1, 2);
  const auto eval_out = dropout_forward(x, 0.5, /*train=*/false, mask_rng);
  for (size_t i = 0; i < x.size(); ++i) CHECK(eval_out.out[i] == x[i]);
  const auto zero_rate = dropout_forward(x, 0.0, /*train=*/true, mask_rng);
  for (size_t i = 0; i < x.size(); ++i) CHECK(zero_rate.out[i] == x[i]);
}

TEST_CASE("dropout statistics match the rate and preserve the mean") {
  Tensor<float> x({100, 100, 1}, 1.0f);
  Pcg32 rng(42, 2);
  const auto res = dropout_forward(x, 0.2, /*train=*/true, rng);
  size_t zeros = 0;
  double sum = 0.0;
  for (size_t i = 0; i < res.out.size(); ++i) {
    if (res.out[i] == 0.0f) ++zeros;
    sum += res.out[i];
  }
  const double zero_frac = static_cast<double>(zeros) / static_cast<double>(x.size());
  CHECK(zero_frac == Catch::Approx(0.2).margin(0.02));
  CHECK(sum / static_cast<double>(x.size()) == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("dropout masks are deterministic under the seed") {
  Pcg32 rng_a(9, 2), rng_b(9, 2);
  Pcg32 data_rng(10, 7);
  const auto x = random_tensor<float>({50, 20, 1}, data_rng);
  const auto a = dropout_forward(x, 0.3, true, rng_a);
  const auto b = dropout_forward(x, 0.3, true, rng_b);
  for (size_t i = 0; i < x.size(); ++i) {
    CHECK(a.out[i] == b.out[i]);
    CHECK(a.mask[i] == b.mask[i]);
  }
}

TEST_CASE("global average pooling averages each channel") {
  Tensor<float> ones({3, 105, 128}, 1.0f);
  const auto out = global_avg_pool_forward(ones);
  REQUIRE(out.size() == 128);
  for (size_t c = 0; c < 128; ++c) CHECK(out[c] == Catch::Approx(1.0f));

  Pcg32 rng(11, 7);
  const auto x = random_tensor<float>({1, 1, 6}, rng);
  const auto id = global_avg_pool_forward(x);
  for (size_t c = 0; c < 6; ++c) CHECK(id[c] == x[c]);

  const auto y = random_tensor<double>({7, 9, 4}, rng);
  const auto pooled = global_avg_pool_forward(y);
  double total = 0, pooled_total = 0;
  for (double v : y.storage()) total += v;
  for (double v : pooled.storage()) pooled_total += v;
  CHECK(pooled_total * 7 * 9 == Catch::Approx(total).margin(1e-4));
}

TEST_CASE("dense layer is the standard affine map") {
  Tensor<float> eye({3, 3});
  for (size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0f;
  Tensor<float> b({3});
  Tensor<float> x({3});
  x[0] = 1;
  x[1] = -2;
  x[2] = 3;
  const auto out = dense_forward(x, eye, b);
  for (size_t i = 0; i < 3; ++i) CHECK(out[i] == x[i]);

  Tensor<float> zero_x({3});
  Tensor<float> bias({3});
  bias[0] = 0.5f;
  bias[1] = -0.5f;
  bias[2] = 2.0f;
  const auto bias_out = dense_forward(zero_x, eye, bias);
  for (size_t i = 0; i < 3; ++i) CHECK(bias_out[i] == bias[i]);

  Pcg32 rng(12, 7);
  const auto xr = random_tensor<double>({17}, rng);
  const auto w = random_tensor<double>({17, 5}, rng);
  const auto br = random_tensor<double>({5}, rng);
  const auto got = dense_forward(xr, w, br);
  for (size_t j = 0; j < 5; ++j) {
    double acc = br[j];
    for (size_t i = 0; i < 17; ++i) acc += xr[i] * w.at(i, j);
    CHECK(got[j] == Catch::Approx(acc).margin(1e-6));
  }
}

TEST_CASE("softmax cross entropy hits the known symmetric value") {
  Tensor<float> logits({2, 2});  // two rows of [0, 0]
  const auto res = softmax_cross_entropy(logits, {0, 0});
  CHECK(res.loss == Catch::Approx(std::log(2.0)).margin(1e-6));
  for (size_t i = 0; i < 2; ++i) {
    CHECK(res.grad.at(i, 0) == Catch::Approx(-0.25).margin(1e-6));
    CHECK(res.grad.at(i, 1) == Catch::Approx(0.25).margin(1e-6));
  }
}

TEST_CASE("softmax cross entropy survives extreme logits") {
  Tensor<double> logits({1, 2});
  logits.at(0, 0) = 1000.0;
  logits.at(0, 1) = 0.0;
  const auto res = softmax_cross_entropy(logits, {0});
  CHECK(std::isfinite(res.loss));
  CHECK(res.loss == Catch::Approx(0.0).margin(1e-9));
  CHECK(res.probabilities.at(0, 0) == Catch::Approx(1.0));
}

TEST_CASE("softmax rejects out-of-range labels") {
  Tensor<float> logits({1, 2});
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {2}), Error);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1}), Error);
}

TEST_CASE("batch norm standardizes channels in train mode") {
  Pcg32 rng(13, 7);
  std::vector<Tensor<double>> batch;
  for (int s = 0; s < 4; ++s) {
    batch.push_back(random_tensor<double>({5, 6, 3}, rng, -2.0, 5.0));
  }
  Tensor<double> gamma({3}, 1.0);
  Tensor<double> beta({3});
  Tensor<double> rm({3});
  Tensor<double> rv({3}, 1.0);
  const auto out = batch_norm_forward(batch, gamma, beta, rm, rv, true,
                                      static_cast<BatchNormCache<double>*>(nullptr));
  for (size_t ch = 0; ch < 3; ++ch) {
    double mean = 0, var = 0;
    double count = 0;
    for (const auto& o : out) {
      for (size_t i = 0; i < 30; ++i) {
        mean += o[i * 3 + ch];
        count += 1;
      }
    }
    mean /= count;
    for (const auto& o : out) {
      for (size_t i = 0; i < 30; ++i) {
        var += (o[i * 3 + ch] - mean) * (o[i * 3 + ch] - mean);
      }
    }
    var /= count;
    CHECK(mean == Catch::Approx(0.0).margin(1e-5));
    CHECK(var == Catch::Approx(1.0).margin(1e-3));
  }
}

TEST_CASE("batch norm eval mode applies the running statistics exactly") {
  Tensor<double> gamma({2});
  gamma[0] = 2.0;
  gamma[1] = 0.5;
  Tensor<double> beta({2});
  beta[0] = 1.0;
  beta[1] = -1.0;
  Tensor<double> rm({2});
  rm[0] = 3.0;
  rm[1] = -2.0;
  Tensor<double> rv({2});
  rv[0] = 4.0;
  rv[1] = 0.25;
  std::vector<Tensor<double>> batch(1, Tensor<double>({1, 2, 2}));
  batch[0].at(0, 0, 0) = 5.0;
  batch[0].at(0, 0, 1) = -1.0;
  batch[0].at(0, 1, 0) = 3.0;
  batch[0].at(0, 1, 1) = -2.0;
  const auto out = batch_norm_forward(batch, gamma, beta, rm, rv, false,
                                      static_cast<BatchNormCache<double>*>(nullptr));
  const double eps = 1e-5;
  CHECK(out[0].at(0, 0, 0) ==
        Catch::Approx(2.0 * (5.0 - 3.0) / std::sqrt(4.0 + eps) + 1.0).margin(1e-12));
  CHECK(out[0].at(0, 0, 1) ==
        Catch::Approx(0.5 * (-1.0 + 2.0) / std::sqrt(0.25 + eps) - 1.0).margin(1e-12));
  CHECK(out[0].at(0, 1, 0) == Catch::Approx(1.0).margin(1e-5));   // at the mean
  CHECK(out[0].at(0, 1, 1) == Catch::Approx(-1.0).margin(1e-5));  // at the mean
}

TEST_CASE("batch norm already-standardized input passes through near-identity") {
  // Two samples engineered to zero mean, unit variance per channel.
  std::vector<Tensor<double>> batch(2, Tensor<double>({1, 2, 1}));
  batch[0].at(0, 0, 0) = 1.0;
  batch[0].at(0, 1, 0) = -1.0;
  batch[1].at(0, 0, 0) = 1.0;
  batch[1].at(0, 1, 0) = -1.0;
  Tensor<double> gamma({1}, 1.0);
  Tensor<double> beta({1});
  Tensor<double> rm({1});
  Tensor<double> rv({1}, 1.0);
  const auto out = batch_norm_forward(batch, gamma, beta, rm, rv, true,
                                      static_cast<BatchNormCache<double>*>(nullptr));
  for (const auto& o : out) {
    CHECK(o.at(0, 0, 0) == Catch::Approx(1.0).margin(1e-4));
    CHECK(o.at(0, 1, 0) == Catch::Approx(-1.0).margin(1e-4));
  }
}

TEST_CASE("batch norm training rejects single-sample batches") {
  std::vector<Tensor<float>> batch(1, Tensor<float>({2, 2, 1}, 1.0f));
  Tensor<float> gamma({1}, 1.0f);
  Tensor<float> beta({1});
  Tensor<float> rm({1});
  Tensor<float> rv({1}, 1.0f);
  CHECK_THROWS_AS(batch_norm_forward(batch, gamma, beta, rm, rv, true,
                                     static_cast<BatchNormCache<float>*>(nullptr)),
                  Error);
  try {
    batch_norm_forward(batch, gamma, beta, rm, rv, true,
                       static_cast<BatchNormCache<float>*>(nullptr));
  } catch (const Error& e) {
    CHECK(e.code() == errc::batch_too_small);
  }
  // eval mode has no batch-size requirement
  CHECK_NOTHROW(batch_norm_forward(batch, gamma, beta, rm, rv, false,
                                   static_cast<BatchNormCache<float>*>(nullptr)));
}
