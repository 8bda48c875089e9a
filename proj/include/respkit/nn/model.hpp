#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/nn/layers.hpp"

namespace respkit::nn {

enum class Architecture : uint8_t { gapnet = 0, blocknet = 1 };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::gapnet ? "gapnet" : "blocknet";
}

enum class LayerOp : uint8_t {
  conv = 0,
  relu = 1,
  maxpool = 2,
  dropout = 3,
  batch_norm = 4,
  global_pool = 5,
  flatten = 6,
  dense = 7,
};

struct LayerSpec {
  LayerOp op = LayerOp::relu;
  uint32_t units = 0;   // conv filters or dense width
  uint32_t kernel = 0;  // conv kernel or pool size
  uint32_t stride = 1;
  uint8_t same_pad = 0;  // conv only
  float rate = 0.0f;     // dropout only

  static LayerSpec conv2d(uint32_t filters, uint32_t kernel, bool same = false,
                          uint32_t stride = 1) {
    LayerSpec s;
    s.op = LayerOp::conv;
    s.units = filters;
    s.kernel = kernel;
    s.stride = stride;
    s.same_pad = same ? 1 : 0;
    return s;
  }
  static LayerSpec relu_() {
    LayerSpec s;
    s.op = LayerOp::relu;
    return s;
  }
  static LayerSpec pool(uint32_t size) {
    LayerSpec s;
    s.op = LayerOp::maxpool;
    s.kernel = size;
    s.stride = size;
    return s;
  }
  static LayerSpec dropout_(float rate) {
    LayerSpec s;
    s.op = LayerOp::dropout;
    s.rate = rate;
    return s;
  }
  static LayerSpec batch_norm_() {
    LayerSpec s;
    s.op = LayerOp::batch_norm;
    return s;
  }
  static LayerSpec global_pool() {
    LayerSpec s;
    s.op = LayerOp::global_pool;
    return s;
  }
  static LayerSpec flatten_() {
    LayerSpec s;
    s.op = LayerOp::flatten;
    return s;
  }
  static LayerSpec dense_(uint32_t units) {
    LayerSpec s;
    s.op = LayerOp::dense;
    s.units = units;
    return s;
  }
};

struct ModelConfig {
  Architecture architecture = Architecture::gapnet;
  uint32_t input_h = 40;
  uint32_t input_w = 862;
  uint32_t input_c = 1;
  uint32_t n_classes = 2;
  std::vector<LayerSpec> layers;

  /// Four stride-1 valid convolutions (kernel 2) with 2x2 pools between them,
  /// dropout after pools 1, 3 and 4, global average pooling, and a two-way
  /// dense head. The default filter ladder is 16/32/64/128.
  static ModelConfig gapnet(uint32_t conv4_filters = 128) {
    ModelConfig c;
    c.architecture = Architecture::gapnet;
    auto& L = c.layers;
    L.push_back(LayerSpec::conv2d(16, 2));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::pool(2));
    L.push_back(LayerSpec::dropout_(0.2f));
    L.push_back(LayerSpec::conv2d(32, 2));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::pool(2));
    L.push_back(LayerSpec::conv2d(64, 2));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::pool(2));
    L.push_back(LayerSpec::dropout_(0.2f));
    L.push_back(LayerSpec::conv2d(conv4_filters, 2));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::pool(2));
    L.push_back(LayerSpec::dropout_(0.2f));
    L.push_back(LayerSpec::global_pool());
    L.push_back(LayerSpec::dense_(2));
    return c;
  }

  /// Three same-padded 3x3 convolution blocks (64/128/128) with 3x3 stride-3
  /// pooling, batch normalization (or dropout) before each activation, then a
  /// 128-64-2 dense head on the flattened map.
  static ModelConfig blocknet(bool use_batch_norm = true) {
    ModelConfig c;
    c.architecture = Architecture::blocknet;
    auto& L = c.layers;
    for (uint32_t filters : {64u, 128u, 128u}) {
      L.push_back(LayerSpec::conv2d(filters, 3, /*same=*/true));
      if (use_batch_norm) {
        L.push_back(LayerSpec::batch_norm_());
      } else {
        L.push_back(LayerSpec::dropout_(0.2f));
      }
      L.push_back(LayerSpec::relu_());
      L.push_back(LayerSpec::pool(3));
    }
    L.push_back(LayerSpec::flatten_());
    L.push_back(LayerSpec::dense_(128));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::dense_(64));
    L.push_back(LayerSpec::relu_());
    L.push_back(LayerSpec::dense_(2));
    return c;
  }

  bool has_batch_norm() const {
    for (const auto& l : layers) {
      if (l.op == LayerOp::batch_norm) return true;
    }
    return false;
  }
};

/// Shape of the activation flowing between layers. Spatial until a flatten or
/// global pool collapses it to a vector.
struct ActivationShape {
  bool flat = false;
  size_t h = 0, w = 0, c = 0;  // spatial form
  size_t units = 0;            // flat form

  size_t count() const { return flat ? units : h * w * c; }
  std::string to_string() const {
    if (flat) return "(" + std::to_string(units) + ")";
    return "(" + std::to_string(h) + "," + std::to_string(w) + "," + std::to_string(c) + ")";
  }
};

/// Activation shapes at every layer boundary: entry i is the input of layer i,
/// the last entry is the network output. Throws InvalidConfig on an
/// inconsistent chain.
inline std::vector<ActivationShape> infer_shapes(const ModelConfig& cfg) {
  std::vector<ActivationShape> shapes;
  ActivationShape s;
  s.h = cfg.input_h;
  s.w = cfg.input_w;
  s.c = cfg.input_c;
  shapes.push_back(s);

  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& l = cfg.layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.op) {
      case LayerOp::conv: {
        require(!s.flat, errc::invalid_config, where + ": conv needs a spatial input");
        require(l.kernel >= 1 && l.units >= 1, errc::invalid_config,
                where + ": conv needs kernel and filters");
        if (l.same_pad) {
          s.h = (s.h + l.stride - 1) / l.stride;
          s.w = (s.w + l.stride - 1) / l.stride;
        } else {
          require(s.h >= l.kernel && s.w >= l.kernel, errc::invalid_config,
                  where + ": kernel exceeds input");
          s.h = (s.h - l.kernel) / l.stride + 1;
          s.w = (s.w - l.kernel) / l.stride + 1;
        }
        s.c = l.units;
        break;
      }
      case LayerOp::maxpool: {
        require(!s.flat, errc::invalid_config, where + ": pool needs a spatial input");
        require(l.kernel >= 1, errc::invalid_config, where + ": pool size missing");
        s.h /= l.kernel;
        s.w /= l.kernel;
        require(s.h >= 1 && s.w >= 1, errc::invalid_config, where + ": pool empties the map");
        break;
      }
      case LayerOp::relu:
        break;
      case LayerOp::dropout:
        require(l.rate >= 0.0f && l.rate < 1.0f, errc::invalid_config,
                where + ": dropout rate must be in [0, 1)");
        break;
      case LayerOp::batch_norm:
        require(!s.flat, errc::invalid_config, where + ": batch norm needs a spatial input");
        break;
      case LayerOp::global_pool: {
        require(!s.flat, errc::invalid_config, where + ": global pool needs a spatial input");
        s.flat = true;
        s.units = s.c;
        break;
      }
      case LayerOp::flatten: {
        require(!s.flat, errc::invalid_config, where + ": flatten needs a spatial input");
        s.flat = true;
        s.units = s.h * s.w * s.c;
        break;
      }
      case LayerOp::dense: {
        require(s.flat, errc::invalid_config, where + ": dense needs a flat input");
        require(l.units >= 1, errc::invalid_config, where + ": dense width missing");
        s.units = l.units;
        break;
      }
    }
    shapes.push_back(s);
  }
  require(shapes.back().flat && shapes.back().units == cfg.n_classes, errc::invalid_config,
          "network must end in a dense layer with one unit per class");
  return shapes;
}

/// Learnable tensors in layer order (conv: weights then bias; dense: weights
/// then bias; batch norm: gamma then beta), plus non-learnable running
/// statistics for batch-norm layers (mean then variance, in layer order).
template <typename T>
struct ParamSet {
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> buffers;

  size_t total_parameter_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += w.size();
    return n;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& w : weights) out.weights.push_back(w.template cast<U>());
    for (const auto& b : buffers) out.buffers.push_back(b.template cast<U>());
    return out;
  }
};

/// He-normal weights (std = sqrt(2 / fan_in)), zero biases, unit gamma, zero
/// beta, running stats at (0, 1). Deterministic under the seed.
template <typename T>
ParamSet<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  const auto shapes = infer_shapes(cfg);
  Pcg32 rng(seed, 0);  // stream 0: initialization
  ParamSet<T> params;
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerSpec& l = cfg.layers[i];
    const ActivationShape& in = shapes[i];
    switch (l.op) {
      case LayerOp::conv: {
        const size_t k = l.kernel;
        const size_t fan_in = k * k * in.c;
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Tensor<T> w({k, k, in.c, static_cast<size_t>(l.units)});
        for (T& v : w.storage()) v = static_cast<T>(rng.normal(0.0, std_dev));
        params.weights.push_back(std::move(w));
        params.weights.push_back(Tensor<T>({static_cast<size_t>(l.units)}));
        break;
      }
      case LayerOp::dense: {
        const size_t fan_in = in.units;
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Tensor<T> w({fan_in, static_cast<size_t>(l.units)});
        for (T& v : w.storage()) v = static_cast<T>(rng.normal(0.0, std_dev));
        params.weights.push_back(std::move(w));
        params.weights.push_back(Tensor<T>({static_cast<size_t>(l.units)}));
        break;
      }
      case LayerOp::batch_norm: {
        params.weights.push_back(Tensor<T>({in.c}, T{1}));  // gamma
        params.weights.push_back(Tensor<T>({in.c}));        // beta
        params.buffers.push_back(Tensor<T>({in.c}));        // running mean
        params.buffers.push_back(Tensor<T>({in.c}, T{1}));  // running variance
        break;
      }
      default:
        break;
    }
  }
  return params;
}

/// Everything the backward pass needs, one entry per layer, one slot per
/// batch sample.
template <typename T>
struct BatchCache {
  struct Layer {
    std::vector<Tensor<T>> inputs;
    std::vector<std::vector<size_t>> argmax;
    std::vector<Tensor<T>> masks;
    BatchNormCache<T> bn;
  };
  std::vector<Layer> layers;
};

namespace detail {

// Reshape helpers: flatten and global pool change rank; the vector form keeps
// rank 1.
template <typename T>
Tensor<T> as_flat(const Tensor<T>& x) {
  return Tensor<T>::from_data({x.size()}, x.storage());
}

}  // namespace detail

/// Forward pass over a batch. In train mode dropout draws masks from the rng
/// (sample-major order) and batch norm uses batch statistics, updating the
/// running buffers in params. Returns (batch, n_classes) logits. A cache may
/// be captured for the backward pass.
template <typename T>
Tensor<T> forward_batch(const ModelConfig& cfg, ParamSet<T>& params,
                        const std::vector<Tensor<T>>& batch, bool train, Pcg32* dropout_rng,
                        BatchCache<T>* cache) {
  require(!batch.empty(), errc::empty_input, "forward: empty batch");
  for (const auto& x : batch) {
    require(x.rank() == 3 && x.extent(0) == cfg.input_h && x.extent(1) == cfg.input_w &&
                x.extent(2) == cfg.input_c,
            errc::shape_violation, "forward: input shape does not match the model");
  }
  if (cache) cache->layers.assign(cfg.layers.size(), typename BatchCache<T>::Layer{});

  std::vector<Tensor<T>> acts = batch;
  size_t wi = 0;  // index into params.weights
  size_t bi = 0;  // index into params.buffers
  for (size_t li = 0; li < cfg.layers.size(); ++li) {
    const LayerSpec& l = cfg.layers[li];
    auto* lc = cache ? &cache->layers[li] : nullptr;
    switch (l.op) {
      case LayerOp::conv: {
        const Tensor<T>& w = params.weights[wi];
        const Tensor<T>& b = params.weights[wi + 1];
        if (lc) lc->inputs = acts;
        for (auto& x : acts) {
          x = conv2d_forward(x, w, b, l.stride, l.same_pad ? Padding::same : Padding::valid);
        }
        wi += 2;
        break;
      }
      case LayerOp::relu: {
        if (lc) lc->inputs = acts;
        for (auto& x : acts) x = relu_forward(x);
        break;
      }
      case LayerOp::maxpool: {
        if (lc) lc->argmax.resize(acts.size());
        for (size_t s = 0; s < acts.size(); ++s) {
          if (lc) lc->inputs.push_back(Tensor<T>(acts[s].shape()));  // shape only
          auto res = maxpool_forward(acts[s], l.kernel);
          if (lc) lc->argmax[s] = std::move(res.argmax);
          acts[s] = std::move(res.out);
        }
        break;
      }
      case LayerOp::dropout: {
        if (train && l.rate > 0.0f) {
          require(dropout_rng != nullptr, errc::invalid_config,
                  "forward: training dropout needs an rng");
          if (lc) lc->masks.resize(acts.size());
          for (size_t s = 0; s < acts.size(); ++s) {
            auto res = dropout_forward(acts[s], static_cast<double>(l.rate), true, *dropout_rng);
            acts[s] = std::move(res.out);
            if (lc) lc->masks[s] = std::move(res.mask);
          }
        }
        break;
      }
      case LayerOp::batch_norm: {
        Tensor<T>& gamma = params.weights[wi];
        Tensor<T>& beta = params.weights[wi + 1];
        Tensor<T>& rm = params.buffers[bi];
        Tensor<T>& rv = params.buffers[bi + 1];
        acts = batch_norm_forward(acts, gamma, beta, rm, rv, train, lc ? &lc->bn : nullptr);
        wi += 2;
        bi += 2;
        break;
      }
      case LayerOp::global_pool: {
        if (lc) lc->inputs.resize(acts.size());
        for (size_t s = 0; s < acts.size(); ++s) {
          if (lc) lc->inputs[s] = Tensor<T>(acts[s].shape());  // shape only
          acts[s] = global_avg_pool_forward(acts[s]);
        }
        break;
      }
      case LayerOp::flatten: {
        if (lc) lc->inputs.resize(acts.size());
        for (size_t s = 0; s < acts.size(); ++s) {
          if (lc) lc->inputs[s] = Tensor<T>(acts[s].shape());  // shape only
          acts[s] = detail::as_flat(acts[s]);
        }
        break;
      }
      case LayerOp::dense: {
        const Tensor<T>& w = params.weights[wi];
        const Tensor<T>& b = params.weights[wi + 1];
        if (lc) lc->inputs = acts;
        for (auto& x : acts) x = dense_forward(x, w, b);
        wi += 2;
        break;
      }
    }
  }

  Tensor<T> logits({batch.size(), static_cast<size_t>(cfg.n_classes)});
  for (size_t s = 0; s < acts.size(); ++s) {
    for (size_t j = 0; j < cfg.n_classes; ++j) logits.at(s, j) = acts[s][j];
  }
  return logits;
}

/// Backward pass over the cached batch; gradients for every learnable tensor
/// are ACCUMULATED into grads (which must mirror params.weights).
template <typename T>
void backward_batch(const ModelConfig& cfg, const ParamSet<T>& params, const BatchCache<T>& cache,
                    const Tensor<T>& grad_logits, std::vector<Tensor<T>>& grads) {
  require(grads.size() == params.weights.size(), errc::shape_mismatch,
          "backward: gradient list must mirror the parameter list");
  const size_t batch_size = grad_logits.extent(0);

  std::vector<Tensor<T>> deltas(batch_size);
  for (size_t s = 0; s < batch_size; ++s) {
    Tensor<T> d({static_cast<size_t>(cfg.n_classes)});
    for (size_t j = 0; j < cfg.n_classes; ++j) d[j] = grad_logits.at(s, j);
    deltas[s] = std::move(d);
  }

  // weight-tensor index just past each layer
  size_t wi = params.weights.size();
  for (size_t li = cfg.layers.size(); li-- > 0;) {
    const LayerSpec& l = cfg.layers[li];
    const auto& lc = cache.layers[li];
    switch (l.op) {
      case LayerOp::dense: {
        wi -= 2;
        const Tensor<T>& w = params.weights[wi];
        for (size_t s = 0; s < batch_size; ++s) {
          auto g = dense_backward(lc.inputs[s], w, deltas[s]);
          for (size_t i = 0; i < g.weights.size(); ++i) grads[wi][i] += g.weights[i];
          for (size_t i = 0; i < g.bias.size(); ++i) grads[wi + 1][i] += g.bias[i];
          deltas[s] = std::move(g.input);
        }
        break;
      }
      case LayerOp::flatten: {
        for (size_t s = 0; s < batch_size; ++s) {
          deltas[s] = Tensor<T>::from_data(lc.inputs[s].shape(), deltas[s].storage());
        }
        break;
      }
      case LayerOp::global_pool: {
        for (size_t s = 0; s < batch_size; ++s) {
          deltas[s] = global_avg_pool_backward(lc.inputs[s].shape(), deltas[s]);
        }
        break;
      }
      case LayerOp::batch_norm: {
        wi -= 2;
        auto g = batch_norm_backward(lc.bn, params.weights[wi], deltas);
        for (size_t i = 0; i < g.gamma.size(); ++i) grads[wi][i] += g.gamma[i];
        for (size_t i = 0; i < g.beta.size(); ++i) grads[wi + 1][i] += g.beta[i];
        deltas = std::move(g.inputs);
        break;
      }
      case LayerOp::dropout: {
        if (!lc.masks.empty()) {
          for (size_t s = 0; s < batch_size; ++s) {
            deltas[s] = dropout_backward(lc.masks[s], deltas[s]);
          }
        }
        break;
      }
      case LayerOp::maxpool: {
        for (size_t s = 0; s < batch_size; ++s) {
          deltas[s] = maxpool_backward(lc.inputs[s].shape(), lc.argmax[s], deltas[s]);
        }
        break;
      }
      case LayerOp::relu: {
        for (size_t s = 0; s < batch_size; ++s) {
          deltas[s] = relu_backward(lc.inputs[s], deltas[s]);
        }
        break;
      }
      case LayerOp::conv: {
        wi -= 2;
        const Tensor<T>& w = params.weights[wi];
        for (size_t s = 0; s < batch_size; ++s) {
          auto g = conv2d_backward(lc.inputs[s], w, deltas[s], l.stride,
                                   l.same_pad ? Padding::same : Padding::valid);
          for (size_t i = 0; i < g.weights.size(); ++i) grads[wi][i] += g.weights[i];
          for (size_t i = 0; i < g.bias.size(); ++i) grads[wi + 1][i] += g.bias[i];
          deltas[s] = std::move(g.input);
        }
        break;
      }
    }
  }
}

/// Gradient tensors shaped like the learnable parameters, zero-filled.
template <typename T>
std::vector<Tensor<T>> zero_grads(const ParamSet<T>& params) {
  std::vector<Tensor<T>> grads;
  grads.reserve(params.weights.size());
  for (const auto& w : params.weights) grads.emplace_back(w.shape());
  return grads;
}

}  // namespace respkit::nn
