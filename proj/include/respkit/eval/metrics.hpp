#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit::eval {

/// Binary confusion counts; the positive class is copd (label 1).
struct ConfusionMatrix {
  size_t tp = 0;
  size_t fp = 0;
  size_t tn = 0;
  size_t fn = 0;

  size_t total() const { return tp + fp + tn + fn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  require(predictions.size() == labels.size(), errc::length_mismatch,
          "confusion: prediction/label length mismatch");
  require(!predictions.empty(), errc::empty_input, "confusion: nothing to evaluate");
  ConfusionMatrix cm;
  for (size_t i = 0; i < predictions.size(); ++i) {
    require(predictions[i] == 0 || predictions[i] == 1, errc::invalid_label,
            "confusion: predictions must be 0 or 1");
    require(labels[i] == 0 || labels[i] == 1, errc::invalid_label,
            "confusion: labels must be 0 or 1");
    if (labels[i] == 1) {
      predictions[i] == 1 ? ++cm.tp : ++cm.fn;
    } else {
      predictions[i] == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  // positive class (copd)
  double recall = 0.0;
  double f1 = 0.0;
  double weighted_f1 = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();  // filled separately
  ClassMetrics per_class[2];  // [0] = non-copd, [1] = copd
  bool degenerate = false;    // some denominator was zero
};

namespace detail {

inline double ratio(size_t num, size_t denom, bool& degenerate) {
  if (denom == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(denom);
}

inline double harmonic_f1(double precision, double recall, bool& degenerate) {
  if (precision + recall == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  require(cm.total() > 0, errc::empty_input, "metrics: empty confusion matrix");
  MetricsReport r;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());

  ClassMetrics& pos = r.per_class[1];
  pos.precision = detail::ratio(cm.tp, cm.tp + cm.fp, r.degenerate);
  pos.recall = detail::ratio(cm.tp, cm.tp + cm.fn, r.degenerate);
  pos.f1 = detail::harmonic_f1(pos.precision, pos.recall, r.degenerate);
  pos.support = cm.tp + cm.fn;

  ClassMetrics& neg = r.per_class[0];
  neg.precision = detail::ratio(cm.tn, cm.tn + cm.fn, r.degenerate);
  neg.recall = detail::ratio(cm.tn, cm.tn + cm.fp, r.degenerate);
  neg.f1 = detail::harmonic_f1(neg.precision, neg.recall, r.degenerate);
  neg.support = cm.tn + cm.fp;

  r.precision = pos.precision;
  r.recall = pos.recall;
  r.f1 = pos.f1;
  r.weighted_f1 = (static_cast<double>(pos.support) * pos.f1 +
                   static_cast<double>(neg.support) * neg.f1) /
                  static_cast<double>(cm.total());
  return r;
}

/// Mann-Whitney AUC with average ranks for ties: the probability that a
/// random positive item outscores a random negative one, ties counting half.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), errc::length_mismatch,
          "auc: score/label length mismatch");
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (int l : labels) {
    require(l == 0 || l == 1, errc::invalid_label, "auc: labels must be 0 or 1");
    n_pos += static_cast<size_t>(l);
  }
  const size_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, errc::single_class, "auc: both classes required");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double pos_rank_sum = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) pos_rank_sum += rank[k];
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace respkit::eval
