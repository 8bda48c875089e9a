#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/nn/model.hpp"

namespace respkit::nn {

/// Moment estimates mirroring the learnable parameters, plus the step count.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  long long t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState make(const ParamSet<T>& params, double lr = 0.001) {
    AdamState s;
    s.lr = lr;
    for (const auto& w : params.weights) {
      s.m.emplace_back(w.shape());
      s.v.emplace_back(w.shape());
    }
    return s;
  }
};

/// One optimizer step: exponential moment updates with bias correction, then
/// theta -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename T>
void adam_step(ParamSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state) {
  require(grads.size() == params.weights.size() && state.m.size() == params.weights.size(),
          errc::shape_mismatch, "adam: gradient/state lists must mirror the parameters");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.weights.size(); ++i) {
    require(grads[i].same_shape(params.weights[i]), errc::shape_mismatch,
            "adam: gradient shape mismatch");
    Tensor<T>& w = params.weights[i];
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    for (size_t j = 0; j < w.size(); ++j) {
      const double g = static_cast<double>(grads[i][j]);
      const double mj = state.beta1 * static_cast<double>(m[j]) + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * static_cast<double>(v[j]) + (1.0 - state.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      w[j] = static_cast<T>(static_cast<double>(w[j]) -
                            state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

}  // namespace respkit::nn
