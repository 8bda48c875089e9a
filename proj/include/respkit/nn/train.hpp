#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/eval/metrics.hpp"
#include "respkit/nn/adam.hpp"
#include "respkit/nn/model.hpp"

namespace respkit::nn {

template <typename T>
struct LabeledSet {
  std::vector<Tensor<T>> features;
  std::vector<int> labels;

  size_t size() const { return features.size(); }
};

struct Hyper {
  double lr = 0.001;
  size_t batch = 64;
  size_t epochs = 14;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double val_auc = std::numeric_limits<double>::quiet_NaN();
};

using TrainHistory = std::vector<EpochStats>;

template <typename T>
struct TrainResult {
  ParamSet<T> params;
  TrainHistory history;
};

namespace detail {

// Eval mode touches neither the running buffers nor dropout state, so a
// const parameter set is safe to thread through the non-const interface.
template <typename T>
Tensor<T> forward_eval_one(const ModelConfig& cfg, const ParamSet<T>& params,
                           const Tensor<T>& x) {
  auto& mutable_params = const_cast<ParamSet<T>&>(params);
  return forward_batch(cfg, mutable_params, std::vector<Tensor<T>>{x}, /*train=*/false,
                       nullptr, static_cast<BatchCache<T>*>(nullptr));
}

template <typename T>
void validate_set(const ModelConfig& cfg, const LabeledSet<T>& set, const char* what) {
  require(!set.features.empty(), errc::empty_dataset,
          std::string("train: empty ") + what + " set");
  require(set.features.size() == set.labels.size(), errc::length_mismatch,
          std::string("train: ") + what + " features/labels length mismatch");
  for (const auto& f : set.features) {
    require(f.rank() == 3 && f.extent(0) == cfg.input_h && f.extent(1) == cfg.input_w &&
                f.extent(2) == cfg.input_c,
            errc::shape_violation, std::string("train: ") + what + " feature shape mismatch");
  }
  for (int l : set.labels) {
    require(l == 0 || l == 1, errc::invalid_label,
            std::string("train: ") + what + " labels must be 0 or 1");
  }
}

}  // namespace detail

/// Class probabilities [p_non_copd, p_copd] for one feature, eval mode.
template <typename T>
std::vector<double> predict(const ModelConfig& cfg, const ParamSet<T>& params,
                            const Tensor<T>& feature) {
  require(feature.rank() == 3 && feature.extent(0) == cfg.input_h &&
              feature.extent(1) == cfg.input_w && feature.extent(2) == cfg.input_c,
          errc::shape_violation, "predict: feature shape does not match the model");
  const Tensor<T> logits = detail::forward_eval_one(cfg, params, feature);
  const auto sm = softmax_cross_entropy(logits, std::vector<int>{0});  // label unused for probs
  std::vector<double> probs(cfg.n_classes);
  for (size_t j = 0; j < cfg.n_classes; ++j) {
    probs[j] = static_cast<double>(sm.probabilities.at(0, j));
  }
  return probs;
}

/// Loss/accuracy/AUC of a parameter set over a labeled set, eval mode.
/// AUC is NaN when the set holds a single class.
template <typename T>
EpochStats evaluate(const ModelConfig& cfg, const ParamSet<T>& params, const LabeledSet<T>& set) {
  detail::validate_set(cfg, set, "evaluation");
  double loss_sum = 0.0;
  size_t correct = 0;
  std::vector<double> scores(set.size());
  std::vector<int> preds(set.size());
  for (size_t i = 0; i < set.size(); ++i) {
    const Tensor<T> logits = detail::forward_eval_one(cfg, params, set.features[i]);
    const auto sm = softmax_cross_entropy(logits, std::vector<int>{set.labels[i]});
    loss_sum += static_cast<double>(sm.loss);
    scores[i] = static_cast<double>(sm.probabilities.at(0, 1));
    preds[i] = sm.probabilities.at(0, 1) > sm.probabilities.at(0, 0) ? 1 : 0;
    if (preds[i] == set.labels[i]) ++correct;
  }
  EpochStats stats;
  stats.val_loss = loss_sum / static_cast<double>(set.size());
  stats.val_acc = static_cast<double>(correct) / static_cast<double>(set.size());
  const bool both_classes =
      std::count(set.labels.begin(), set.labels.end(), 1) > 0 &&
      std::count(set.labels.begin(), set.labels.end(), 0) > 0;
  if (both_classes) stats.val_auc = eval::roc_auc(scores, set.labels);
  return stats;
}

/// Seeded epoch loop: shuffle, fixed-size batches (remainder kept), forward /
/// backward / Adam per batch in deterministic order. Architectures without
/// batch normalization stream one sample at a time through the backward pass,
/// which keeps memory flat; batch-norm architectures process whole batches
/// and refuse stray single-sample batches.
template <typename T>
TrainResult<T> train(const ModelConfig& cfg, const LabeledSet<T>& train_set, const Hyper& hyper,
                     uint64_t seed, const LabeledSet<T>* validation = nullptr) {
  detail::validate_set(cfg, train_set, "training");
  require(hyper.batch >= 1 && hyper.epochs >= 1, errc::invalid_config,
          "train: batch and epochs must be >= 1");

  TrainResult<T> result;
  result.params = init_params<T>(cfg, seed);
  AdamState<T> adam = AdamState<T>::make(result.params, hyper.lr);
  Pcg32 shuffle_rng(seed, 1);
  Pcg32 dropout_rng(seed, 2);
  const bool batch_norm = cfg.has_batch_norm();
  const size_t n = train_set.size();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  for (size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t correct = 0;

    for (size_t start = 0; start < n; start += hyper.batch) {
      const size_t bsz = std::min(hyper.batch, n - start);
      std::vector<int> batch_labels(bsz);
      for (size_t i = 0; i < bsz; ++i) batch_labels[i] = train_set.labels[order[start + i]];

      auto grads = zero_grads(result.params);
      if (batch_norm) {
        std::vector<Tensor<T>> batch(bsz);
        for (size_t i = 0; i < bsz; ++i) batch[i] = train_set.features[order[start + i]];
        BatchCache<T> cache;
        const Tensor<T> logits =
            forward_batch(cfg, result.params, batch, /*train=*/true, &dropout_rng, &cache);
        const auto sm = softmax_cross_entropy(logits, batch_labels);
        loss_sum += static_cast<double>(sm.loss) * static_cast<double>(bsz);
        for (size_t i = 0; i < bsz; ++i) {
          const int pred = sm.probabilities.at(i, 1) > sm.probabilities.at(i, 0) ? 1 : 0;
          if (pred == batch_labels[i]) ++correct;
        }
        backward_batch(cfg, result.params, cache, sm.grad, grads);
      } else {
        // Per-sample streaming: the batch loss decomposes per sample, so each
        // sample's cache can be dropped as soon as it has been backpropagated.
        for (size_t i = 0; i < bsz; ++i) {
          const Tensor<T>& x = train_set.features[order[start + i]];
          BatchCache<T> cache;
          const Tensor<T> logits = forward_batch(cfg, result.params, std::vector<Tensor<T>>{x},
                                                 /*train=*/true, &dropout_rng, &cache);
          const auto sm = softmax_cross_entropy(logits, std::vector<int>{batch_labels[i]});
          loss_sum += static_cast<double>(sm.loss);
          const int pred = sm.probabilities.at(0, 1) > sm.probabilities.at(0, 0) ? 1 : 0;
          if (pred == batch_labels[i]) ++correct;
          Tensor<T> grad_row = sm.grad;  // already /1; rescale to /batch
          const T scale = static_cast<T>(1.0 / static_cast<double>(bsz));
          for (T& v : grad_row.storage()) v *= scale;
          backward_batch(cfg, result.params, cache, grad_row, grads);
        }
      }
      adam_step(result.params, grads, adam);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (validation) {
      const EpochStats val = evaluate(cfg, result.params, *validation);
      stats.val_loss = val.val_loss;
      stats.val_acc = val.val_acc;
      stats.val_auc = val.val_auc;
    }
    result.history.push_back(stats);
  }
  return result;
}

}  // namespace respkit::nn
