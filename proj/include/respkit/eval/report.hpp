#pragma once

#include <cmath>
#include <string>

#include "respkit/core/error.hpp"
#include "respkit/core/io.hpp"
#include "respkit/eval/crossval.hpp"
#include "respkit/eval/metrics.hpp"
#include "respkit/nn/train.hpp"

namespace respkit::eval {

namespace detail {

// JSON has no NaN literal; undefined metrics become null.
inline std::string json_number(double v) {
  return std::isfinite(v) ? format_f6(v) : std::string("null");
}

inline std::string confusion_json(const ConfusionMatrix& cm) {
  return "{\"tp\": " + std::to_string(cm.tp) + ", \"fp\": " + std::to_string(cm.fp) +
         ", \"tn\": " + std::to_string(cm.tn) + ", \"fn\": " + std::to_string(cm.fn) + "}";
}

inline std::string class_metrics_json(const ClassMetrics& c, const char* label) {
  return std::string("{\"label\": \"") + label + "\", \"precision\": " + json_number(c.precision) +
         ", \"recall\": " + json_number(c.recall) + ", \"f1\": " + json_number(c.f1) +
         ", \"support\": " + std::to_string(c.support) + "}";
}

inline std::string metrics_json_body(const MetricsReport& m, const std::string& indent) {
  std::string s;
  s += indent + "\"accuracy\": " + json_number(m.accuracy) + ",\n";
  s += indent + "\"precision\": " + json_number(m.precision) + ",\n";
  s += indent + "\"recall\": " + json_number(m.recall) + ",\n";
  s += indent + "\"f1\": " + json_number(m.f1) + ",\n";
  s += indent + "\"weighted_f1\": " + json_number(m.weighted_f1) + ",\n";
  s += indent + "\"auc\": " + json_number(m.auc) + ",\n";
  s += indent + "\"degenerate\": " + (m.degenerate ? std::string("true") : std::string("false")) +
       ",\n";
  s += indent + "\"per_class\": [" + class_metrics_json(m.per_class[0], "non_copd") + ", " +
       class_metrics_json(m.per_class[1], "copd") + "]";
  return s;
}

inline std::string summary_json(const MetricSummary& s) {
  return "{\"mean\": " + json_number(s.mean) + ", \"std\": " + json_number(s.stddev) + "}";
}

}  // namespace detail

/// Per-epoch curves as CSV, one data row per epoch. Refuses an empty history
/// before touching the filesystem.
inline void write_history_csv(const nn::TrainHistory& history, const std::filesystem::path& path) {
  require(!history.empty(), errc::empty_input, "report: empty training history");
  std::string csv = "epoch,train_loss,val_loss,train_acc,val_acc,val_auc\n";
  for (size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    csv += std::to_string(e + 1) + "," + format_f6(h.train_loss) + "," + format_f6(h.val_loss) +
           "," + format_f6(h.train_acc) + "," + format_f6(h.val_acc) + "," +
           format_f6(h.val_auc) + "\n";
  }
  write_file_text(path, csv);
}

/// One evaluation as JSON: the confusion matrix plus every derived metric.
inline void write_metrics_json(const MetricsReport& m, const ConfusionMatrix& cm,
                               const std::filesystem::path& path) {
  std::string s = "{\n";
  s += "  \"confusion\": " + detail::confusion_json(cm) + ",\n";
  s += detail::metrics_json_body(m, "  ");
  s += "\n}\n";
  write_file_text(path, s);
}

/// Cross-validation report as JSON: one entry per fold, an aggregate block of
/// mean/std per metric, and the pooled confusion matrix.
inline void write_cv_json(const CvReport& report, const std::filesystem::path& path) {
  require(!report.folds.empty(), errc::empty_input, "report: no folds to write");
  std::string s = "{\n";
  s += "  \"k\": " + std::to_string(report.folds.size()) + ",\n";
  s += "  \"folds\": [\n";
  for (size_t f = 0; f < report.folds.size(); ++f) {
    s += "    {\n";
    s += "      \"fold\": " + std::to_string(f) + ",\n";
    s += "      \"confusion\": " + detail::confusion_json(report.fold_confusions[f]) + ",\n";
    s += detail::metrics_json_body(report.folds[f], "      ");
    s += "\n    }";
    s += (f + 1 < report.folds.size()) ? ",\n" : "\n";
  }
  s += "  ],\n";
  s += "  \"aggregate\": {\n";
  s += "    \"accuracy\": " + detail::summary_json(report.accuracy) + ",\n";
  s += "    \"precision\": " + detail::summary_json(report.precision) + ",\n";
  s += "    \"recall\": " + detail::summary_json(report.recall) + ",\n";
  s += "    \"f1\": " + detail::summary_json(report.f1) + ",\n";
  s += "    \"weighted_f1\": " + detail::summary_json(report.weighted_f1) + ",\n";
  s += "    \"auc\": " + detail::summary_json(report.auc) + "\n";
  s += "  },\n";
  s += "  \"pooled_confusion\": " + detail::confusion_json(report.pooled) + "\n";
  s += "}\n";
  write_file_text(path, s);
}

}  // namespace respkit::eval
