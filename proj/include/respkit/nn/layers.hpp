#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/core/tensor.hpp"

namespace respkit::nn {

enum class Padding : uint8_t { valid = 0, same = 1 };

namespace detail {

struct ConvGeometry {
  size_t out_h = 0;
  size_t out_w = 0;
  long long pad_top = 0;
  long long pad_left = 0;
};

inline ConvGeometry conv_geometry(size_t h, size_t w, size_t k, size_t stride, Padding pad) {
  require(k >= 1 && stride >= 1, errc::shape_mismatch, "conv: kernel and stride must be >= 1");
  ConvGeometry g;
  if (pad == Padding::valid) {
    require(h >= k && w >= k, errc::shape_mismatch, "conv: kernel larger than input");
    g.out_h = (h - k) / stride + 1;
    g.out_w = (w - k) / stride + 1;
  } else {
    g.out_h = (h + stride - 1) / stride;
    g.out_w = (w + stride - 1) / stride;
    const long long pad_h = std::max<long long>(
        0, static_cast<long long>((g.out_h - 1) * stride + k) - static_cast<long long>(h));
    const long long pad_w = std::max<long long>(
        0, static_cast<long long>((g.out_w - 1) * stride + k) - static_cast<long long>(w));
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  }
  return g;
}

// Patch matrix: one row per output pixel, columns ordered (dy, dx, c) to match
// the (K, K, Cin, F) weight layout.
template <typename T>
std::vector<T> im2col(const Tensor<T>& input, size_t k, size_t stride, const ConvGeometry& g) {
  const size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  const size_t patch = k * k * c;
  std::vector<T> col(g.out_h * g.out_w * patch, T{});
  size_t row = 0;
  for (size_t oy = 0; oy < g.out_h; ++oy) {
    for (size_t ox = 0; ox < g.out_w; ++ox, ++row) {
      T* dst = col.data() + row * patch;
      for (size_t dy = 0; dy < k; ++dy) {
        const long long iy = static_cast<long long>(oy * stride + dy) - g.pad_top;
        for (size_t dx = 0; dx < k; ++dx) {
          const long long ix = static_cast<long long>(ox * stride + dx) - g.pad_left;
          T* cell = dst + (dy * k + dx) * c;
          if (iy < 0 || iy >= static_cast<long long>(h) || ix < 0 ||
              ix >= static_cast<long long>(w)) {
            continue;  // zero padding
          }
          const T* src = input.data() + (static_cast<size_t>(iy) * w + static_cast<size_t>(ix)) * c;
          for (size_t ch = 0; ch < c; ++ch) cell[ch] = src[ch];
        }
      }
    }
  }
  return col;
}

}  // namespace detail

/// input (H, W, Cin), weights (K, K, Cin, F), bias (F) -> (H', W', F).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         size_t stride = 1, Padding pad = Padding::valid) {
  require(input.rank() == 3 && weights.rank() == 4, errc::shape_mismatch,
          "conv: expected rank-3 input and rank-4 weights");
  const size_t k = weights.extent(0);
  require(weights.extent(1) == k, errc::shape_mismatch, "conv: kernel must be square");
  require(weights.extent(2) == input.extent(2), errc::shape_mismatch,
          "conv: channel mismatch between input and weights");
  const size_t f = weights.extent(3);
  require(bias.rank() == 1 && bias.extent(0) == f, errc::shape_mismatch,
          "conv: bias length must equal filter count");

  const auto g = detail::conv_geometry(input.extent(0), input.extent(1), k, stride, pad);
  const size_t patch = k * k * input.extent(2);
  const auto col = detail::im2col(input, k, stride, g);

  Tensor<T> out({g.out_h, g.out_w, f});
  const size_t rows = g.out_h * g.out_w;
  for (size_t r = 0; r < rows; ++r) {
    T* o = out.data() + r * f;
    for (size_t ch = 0; ch < f; ++ch) o[ch] = bias[ch];
    const T* c = col.data() + r * patch;
    for (size_t p = 0; p < patch; ++p) {
      const T v = c[p];
      if (v == T{}) continue;
      const T* wrow = weights.data() + p * f;
      for (size_t ch = 0; ch < f; ++ch) o[ch] += v * wrow[ch];
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out, size_t stride = 1,
                             Padding pad = Padding::valid) {
  const size_t k = weights.extent(0);
  const size_t cin = input.extent(2);
  const size_t f = weights.extent(3);
  const auto g = detail::conv_geometry(input.extent(0), input.extent(1), k, stride, pad);
  require(grad_out.rank() == 3 && grad_out.extent(0) == g.out_h &&
              grad_out.extent(1) == g.out_w && grad_out.extent(2) == f,
          errc::shape_mismatch, "conv backward: upstream gradient shape mismatch");

  const size_t patch = k * k * cin;
  const size_t rows = g.out_h * g.out_w;
  const auto col = detail::im2col(input, k, stride, g);

  ConvGrads<T> grads;
  grads.weights = Tensor<T>({k, k, cin, f});
  grads.bias = Tensor<T>({f});
  grads.input = Tensor<T>({input.extent(0), input.extent(1), cin});

  for (size_t r = 0; r < rows; ++r) {
    const T* go = grad_out.data() + r * f;
    for (size_t ch = 0; ch < f; ++ch) grads.bias[ch] += go[ch];
    const T* c = col.data() + r * patch;
    for (size_t p = 0; p < patch; ++p) {
      const T v = c[p];
      if (v == T{}) continue;
      T* gw = grads.weights.data() + p * f;
      for (size_t ch = 0; ch < f; ++ch) gw[ch] += v * go[ch];
    }
  }

  // grad wrt the patch matrix, scattered back through the padding map
  std::vector<T> gcol(patch);
  const size_t h = input.extent(0), w = input.extent(1);
  size_t row = 0;
  for (size_t oy = 0; oy < g.out_h; ++oy) {
    for (size_t ox = 0; ox < g.out_w; ++ox, ++row) {
      const T* go = grad_out.data() + row * f;
      for (size_t p = 0; p < patch; ++p) {
        const T* wrow = weights.data() + p * f;
        T acc{};
        for (size_t ch = 0; ch < f; ++ch) acc += go[ch] * wrow[ch];
        gcol[p] = acc;
      }
      for (size_t dy = 0; dy < k; ++dy) {
        const long long iy = static_cast<long long>(oy * stride + dy) - g.pad_top;
        if (iy < 0 || iy >= static_cast<long long>(h)) continue;
        for (size_t dx = 0; dx < k; ++dx) {
          const long long ix = static_cast<long long>(ox * stride + dx) - g.pad_left;
          if (ix < 0 || ix >= static_cast<long long>(w)) continue;
          T* dst = grads.input.data() + (static_cast<size_t>(iy) * w + static_cast<size_t>(ix)) * cin;
          const T* src = gcol.data() + (dy * k + dx) * cin;
          for (size_t ch = 0; ch < cin; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
  return grads;
}

template <typename T>
struct PoolResult {
  Tensor<T> out;
  std::vector<size_t> argmax;  // flat input index per output element
};

/// Non-overlapping max pooling; remainder rows/columns are dropped. Ties go to
/// the first maximum in row-major scan order.
template <typename T>
PoolResult<T> maxpool_forward(const Tensor<T>& input, size_t pool) {
  require(input.rank() == 3, errc::shape_mismatch, "maxpool: expected rank-3 input");
  require(pool >= 1, errc::shape_mismatch, "maxpool: pool size must be >= 1");
  const size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  const size_t oh = h / pool, ow = w / pool;
  require(oh >= 1 && ow >= 1, errc::shape_mismatch, "maxpool: input smaller than pool window");

  PoolResult<T> res;
  res.out = Tensor<T>({oh, ow, c});
  res.argmax.resize(oh * ow * c);
  for (size_t oy = 0; oy < oh; ++oy) {
    for (size_t ox = 0; ox < ow; ++ox) {
      for (size_t ch = 0; ch < c; ++ch) {
        size_t best_idx = ((oy * pool) * w + ox * pool) * c + ch;
        T best = input[best_idx];
        for (size_t dy = 0; dy < pool; ++dy) {
          for (size_t dx = 0; dx < pool; ++dx) {
            const size_t idx = ((oy * pool + dy) * w + (ox * pool + dx)) * c + ch;
            if (input[idx] > best) {
              best = input[idx];
              best_idx = idx;
            }
          }
        }
        res.out.at(oy, ox, ch) = best;
        res.argmax[(oy * ow + ox) * c + ch] = best_idx;
      }
    }
  }
  return res;
}

template <typename T>
Tensor<T> maxpool_backward(const std::vector<size_t>& input_shape,
                           const std::vector<size_t>& argmax, const Tensor<T>& grad_out) {
  Tensor<T> grad(input_shape);
  require(argmax.size() == grad_out.size(), errc::shape_mismatch,
          "maxpool backward: argmax/grad size mismatch");
  for (size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_out[i];
  return grad;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.storage()) v = std::max(v, T{});
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  Tensor<T> grad = grad_out;
  for (size_t i = 0; i < grad.size(); ++i) {
    if (input[i] <= T{}) grad[i] = T{};
  }
  return grad;
}

template <typename T>
struct DropoutResult {
  Tensor<T> out;
  Tensor<T> mask;  // 0 for dropped elements, 1/(1-rate) for survivors
};

/// Inverted dropout: survivors are rescaled so the expected value is
/// unchanged. Eval mode is the identity.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, double rate, bool train, Pcg32& rng) {
  require(rate >= 0.0 && rate < 1.0, errc::invalid_spec, "dropout: rate must be in [0, 1)");
  DropoutResult<T> res;
  res.out = input;
  res.mask = Tensor<T>(input.shape(), T{1});
  if (!train || rate == 0.0) return res;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (size_t i = 0; i < input.size(); ++i) {
    if (rng.next_double() < rate) {
      res.mask[i] = T{};
      res.out[i] = T{};
    } else {
      res.mask[i] = keep_scale;
      res.out[i] = input[i] * keep_scale;
    }
  }
  return res;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_out) {
  Tensor<T> grad = grad_out;
  for (size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
  return grad;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& input) {
  require(input.rank() == 3, errc::shape_mismatch, "global pool: expected rank-3 input");
  const size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  Tensor<T> out({c});
  for (size_t i = 0; i < h * w; ++i) {
    const T* src = input.data() + i * c;
    for (size_t ch = 0; ch < c; ++ch) out[ch] += src[ch];
  }
  const T scale = static_cast<T>(1.0 / static_cast<double>(h * w));
  for (T& v : out.storage()) v *= scale;
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const std::vector<size_t>& input_shape,
                                   const Tensor<T>& grad_out) {
  Tensor<T> grad(input_shape);
  const size_t h = input_shape[0], w = input_shape[1], c = input_shape[2];
  const T scale = static_cast<T>(1.0 / static_cast<double>(h * w));
  for (size_t i = 0; i < h * w; ++i) {
    T* dst = grad.data() + i * c;
    for (size_t ch = 0; ch < c; ++ch) dst[ch] = grad_out[ch] * scale;
  }
  return grad;
}

/// input (N), weights (N, M), bias (M) -> (M).
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  require(weights.rank() == 2, errc::shape_mismatch, "dense: expected rank-2 weights");
  const size_t n = weights.extent(0), m = weights.extent(1);
  require(input.size() == n, errc::shape_mismatch, "dense: input length mismatch");
  require(bias.size() == m, errc::shape_mismatch, "dense: bias length mismatch");
  Tensor<T> out({m});
  for (size_t j = 0; j < m; ++j) out[j] = bias[j];
  for (size_t i = 0; i < n; ++i) {
    const T v = input[i];
    if (v == T{}) continue;
    const T* wrow = weights.data() + i * m;
    for (size_t j = 0; j < m; ++j) out[j] += v * wrow[j];
  }
  return out;
}

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out) {
  const size_t n = weights.extent(0), m = weights.extent(1);
  require(grad_out.size() == m, errc::shape_mismatch, "dense backward: gradient length mismatch");
  DenseGrads<T> grads;
  grads.input = Tensor<T>(input.shape());
  grads.weights = Tensor<T>({n, m});
  grads.bias = grad_out;
  for (size_t i = 0; i < n; ++i) {
    const T* wrow = weights.data() + i * m;
    T* gw = grads.weights.data() + i * m;
    T acc{};
    const T v = input[i];
    for (size_t j = 0; j < m; ++j) {
      acc += wrow[j] * grad_out[j];
      gw[j] = v * grad_out[j];
    }
    grads.input[i] = acc;
  }
  return grads;
}

template <typename T>
struct SoftmaxLoss {
  T loss{};
  Tensor<T> grad;           // (B, classes), already divided by B
  Tensor<T> probabilities;  // (B, classes)
};

/// Mean negative log-likelihood under a softmax, with max-subtraction for
/// numerical stability. The gradient is (softmax - onehot) / B.
template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
  require(logits.rank() == 2, errc::shape_mismatch, "loss: expected (batch, classes) logits");
  const size_t b = logits.extent(0), c = logits.extent(1);
  require(labels.size() == b, errc::shape_mismatch, "loss: one label per row required");

  SoftmaxLoss<T> res;
  res.grad = Tensor<T>({b, c});
  res.probabilities = Tensor<T>({b, c});
  double total = 0.0;
  for (size_t i = 0; i < b; ++i) {
    require(labels[i] >= 0 && static_cast<size_t>(labels[i]) < c, errc::invalid_label,
            "loss: label out of range");
    const T* row = logits.data() + i * c;
    T mx = row[0];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (size_t j = 0; j < c; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
    const double log_denom = std::log(denom);
    for (size_t j = 0; j < c; ++j) {
      const double p = std::exp(static_cast<double>(row[j] - mx)) / denom;
      res.probabilities.at(i, j) = static_cast<T>(p);
      res.grad.at(i, j) = static_cast<T>(
          (p - (static_cast<size_t>(labels[i]) == j ? 1.0 : 0.0)) / static_cast<double>(b));
    }
    total += log_denom - static_cast<double>(row[static_cast<size_t>(labels[i])] - mx);
  }
  res.loss = static_cast<T>(total / static_cast<double>(b));
  return res;
}

template <typename T>
struct BatchNormCache {
  std::vector<Tensor<T>> xhat;  // normalized inputs, per sample
  std::vector<T> inv_std;       // per channel
  std::vector<T> mean;          // per channel (batch statistics)
};

/// Per-channel normalization over batch and spatial dimensions. Train mode
/// uses batch statistics (biased variance) and updates the running buffers;
/// eval mode applies the running statistics.
template <typename T>
std::vector<Tensor<T>> batch_norm_forward(const std::vector<Tensor<T>>& batch,
                                          const Tensor<T>& gamma, const Tensor<T>& beta,
                                          Tensor<T>& running_mean, Tensor<T>& running_var,
                                          bool train, BatchNormCache<T>* cache,
                                          double momentum = 0.9, double eps = 1e-5) {
  require(!batch.empty(), errc::empty_input, "batch norm: empty batch");
  const size_t c = batch[0].extent(2);
  require(gamma.size() == c && beta.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          errc::shape_mismatch, "batch norm: channel parameter mismatch");
  for (const auto& x : batch) {
    require(x.rank() == 3 && x.extent(2) == c, errc::shape_mismatch,
            "batch norm: inconsistent sample shapes");
  }

  std::vector<double> mean(c, 0.0), var(c, 0.0);
  if (train) {
    require(batch.size() >= 2, errc::batch_too_small,
            "batch norm: training requires at least 2 samples");
    double count = 0.0;
    for (const auto& x : batch) {
      const size_t spatial = x.extent(0) * x.extent(1);
      count += static_cast<double>(spatial);
      for (size_t i = 0; i < spatial; ++i) {
        const T* src = x.data() + i * c;
        for (size_t ch = 0; ch < c; ++ch) mean[ch] += static_cast<double>(src[ch]);
      }
    }
    for (size_t ch = 0; ch < c; ++ch) mean[ch] /= count;
    for (const auto& x : batch) {
      const size_t spatial = x.extent(0) * x.extent(1);
      for (size_t i = 0; i < spatial; ++i) {
        const T* src = x.data() + i * c;
        for (size_t ch = 0; ch < c; ++ch) {
          const double d = static_cast<double>(src[ch]) - mean[ch];
          var[ch] += d * d;
        }
      }
    }
    for (size_t ch = 0; ch < c; ++ch) var[ch] /= count;
    for (size_t ch = 0; ch < c; ++ch) {
      running_mean[ch] = static_cast<T>(momentum * static_cast<double>(running_mean[ch]) +
                                        (1.0 - momentum) * mean[ch]);
      running_var[ch] = static_cast<T>(momentum * static_cast<double>(running_var[ch]) +
                                       (1.0 - momentum) * var[ch]);
    }
  } else {
    for (size_t ch = 0; ch < c; ++ch) {
      mean[ch] = static_cast<double>(running_mean[ch]);
      var[ch] = static_cast<double>(running_var[ch]);
    }
  }

  std::vector<T> inv_std(c);
  for (size_t ch = 0; ch < c; ++ch) {
    inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var[ch] + eps));
  }

  std::vector<Tensor<T>> out(batch.size());
  if (cache) {
    cache->xhat.assign(batch.size(), Tensor<T>{});
    cache->inv_std = inv_std;
    cache->mean.resize(c);
    for (size_t ch = 0; ch < c; ++ch) cache->mean[ch] = static_cast<T>(mean[ch]);
  }
  for (size_t s = 0; s < batch.size(); ++s) {
    const auto& x = batch[s];
    out[s] = Tensor<T>(x.shape());
    Tensor<T> xhat(x.shape());
    const size_t spatial = x.extent(0) * x.extent(1);
    for (size_t i = 0; i < spatial; ++i) {
      const T* src = x.data() + i * c;
      T* xh = xhat.data() + i * c;
      T* dst = out[s].data() + i * c;
      for (size_t ch = 0; ch < c; ++ch) {
        xh[ch] = static_cast<T>((static_cast<double>(src[ch]) - mean[ch])) * inv_std[ch];
        dst[ch] = gamma[ch] * xh[ch] + beta[ch];
      }
    }
    if (cache) cache->xhat[s] = std::move(xhat);
  }
  return out;
}

template <typename T>
struct BatchNormGrads {
  std::vector<Tensor<T>> inputs;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batch_norm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                      const std::vector<Tensor<T>>& grad_out) {
  const size_t c = gamma.size();
  BatchNormGrads<T> grads;
  grads.gamma = Tensor<T>({c});
  grads.beta = Tensor<T>({c});
  grads.inputs.resize(grad_out.size());

  double count = 0.0;
  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  for (size_t s = 0; s < grad_out.size(); ++s) {
    const auto& dy = grad_out[s];
    const auto& xh = cache.xhat[s];
    const size_t spatial = dy.extent(0) * dy.extent(1);
    count += static_cast<double>(spatial);
    for (size_t i = 0; i < spatial; ++i) {
      const T* d = dy.data() + i * c;
      const T* x = xh.data() + i * c;
      for (size_t ch = 0; ch < c; ++ch) {
        sum_dy[ch] += static_cast<double>(d[ch]);
        sum_dy_xhat[ch] += static_cast<double>(d[ch]) * static_cast<double>(x[ch]);
      }
    }
  }
  for (size_t ch = 0; ch < c; ++ch) {
    grads.gamma[ch] = static_cast<T>(sum_dy_xhat[ch]);
    grads.beta[ch] = static_cast<T>(sum_dy[ch]);
  }

  // dx = (gamma * inv_std / N) * (N*dy - sum(dy) - xhat * sum(dy*xhat))
  for (size_t s = 0; s < grad_out.size(); ++s) {
    const auto& dy = grad_out[s];
    const auto& xh = cache.xhat[s];
    grads.inputs[s] = Tensor<T>(dy.shape());
    const size_t spatial = dy.extent(0) * dy.extent(1);
    for (size_t i = 0; i < spatial; ++i) {
      const T* d = dy.data() + i * c;
      const T* x = xh.data() + i * c;
      T* gx = grads.inputs[s].data() + i * c;
      for (size_t ch = 0; ch < c; ++ch) {
        const double scale =
            static_cast<double>(gamma[ch]) * static_cast<double>(cache.inv_std[ch]) / count;
        gx[ch] = static_cast<T>(scale * (count * static_cast<double>(d[ch]) - sum_dy[ch] -
                                         static_cast<double>(x[ch]) * sum_dy_xhat[ch]));
      }
    }
  }
  return grads;
}

}  // namespace respkit::nn
