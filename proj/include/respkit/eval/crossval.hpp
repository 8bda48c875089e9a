#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/dataset/split.hpp"
#include "respkit/eval/metrics.hpp"
#include "respkit/nn/train.hpp"

namespace respkit::eval {

struct MetricSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
};

struct CvReport {
  std::vector<MetricsReport> folds;
  std::vector<ConfusionMatrix> fold_confusions;
  ConfusionMatrix pooled;  // every item validated exactly once
  MetricSummary accuracy;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f1;
  MetricSummary weighted_f1;
  MetricSummary auc;
};

namespace detail {

// Sample mean and standard deviation (n-1 denominator) over the finite
// entries; both NaN when nothing is finite, stddev 0 for a single entry.
inline MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return s;
  double sum = 0.0;
  for (double v : finite) sum += v;
  s.mean = sum / static_cast<double>(finite.size());
  if (finite.size() == 1) {
    s.stddev = 0.0;
    return s;
  }
  double sq = 0.0;
  for (double v : finite) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(finite.size() - 1));
  return s;
}

}  // namespace detail

/// One model per fold, each trained from a fresh seeded init (seed +
/// fold_index) and scored on that fold's validation subset. The caller maps
/// entries to features, so only the given index is ever touched. AUC
/// aggregation skips folds whose validation subset holds a single class.
template <typename Provider>
CvReport cross_validate(const nn::ModelConfig& model, const nn::Hyper& hyper,
                        const dataset::DatasetIndex& index, size_t k, uint64_t seed,
                        Provider&& feature_of) {
  const auto folds = dataset::make_folds(index, k, seed);

  CvReport report;
  std::vector<double> acc, prec, rec, f1, wf1, auc;
  for (size_t f = 0; f < folds.size(); ++f) {
    nn::LabeledSet<float> train_set;
    for (const auto& e : folds[f].train.entries) {
      train_set.features.push_back(feature_of(e));
      train_set.labels.push_back(e.binary_label == dataset::BinaryLabel::copd ? 1 : 0);
    }
    const auto trained = nn::train(model, train_set, hyper, seed + f);

    std::vector<int> preds, labels;
    std::vector<double> scores;
    for (const auto& e : folds[f].validation.entries) {
      const auto p = nn::predict(model, trained.params, feature_of(e));
      scores.push_back(p[1]);
      preds.push_back(p[1] > p[0] ? 1 : 0);
      labels.push_back(e.binary_label == dataset::BinaryLabel::copd ? 1 : 0);
    }
    const ConfusionMatrix cm = confusion(preds, labels);
    MetricsReport m = metrics(cm);
    const bool both = (cm.tp + cm.fn) > 0 && (cm.tn + cm.fp) > 0;
    if (both) m.auc = roc_auc(scores, labels);

    report.pooled += cm;
    report.fold_confusions.push_back(cm);
    report.folds.push_back(m);
    acc.push_back(m.accuracy);
    prec.push_back(m.precision);
    rec.push_back(m.recall);
    f1.push_back(m.f1);
    wf1.push_back(m.weighted_f1);
    auc.push_back(m.auc);
  }

  report.accuracy = detail::summarize(acc);
  report.precision = detail::summarize(prec);
  report.recall = detail::summarize(rec);
  report.f1 = detail::summarize(f1);
  report.weighted_f1 = detail::summarize(wf1);
  report.auc = detail::summarize(auc);
  return report;
}

}  // namespace respkit::eval
