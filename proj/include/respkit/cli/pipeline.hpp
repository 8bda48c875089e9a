#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "respkit/audio/augment.hpp"
#include "respkit/audio/clip.hpp"
#include "respkit/audio/wav.hpp"
#include "respkit/cli/config.hpp"
#include "respkit/core/io.hpp"
#include "respkit/dataset/balance.hpp"
#include "respkit/dataset/index.hpp"
#include "respkit/dataset/meta.hpp"
#include "respkit/dataset/split.hpp"
#include "respkit/dsp/filters.hpp"
#include "respkit/eval/crossval.hpp"
#include "respkit/eval/report.hpp"
#include "respkit/features/cache.hpp"
#include "respkit/features/feature.hpp"
#include "respkit/nn/serialize.hpp"
#include "respkit/nn/train.hpp"
#include "respkit/segment/calibrate.hpp"

namespace respkit::cli {

namespace fs = std::filesystem;

/// The environment variable wins over the config value so batch jobs can
/// point many runs at one shared cache without editing config files.
inline fs::path resolve_cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("RESPKIT_CACHE_DIR"); env != nullptr && *env != '\0')
    return fs::path(env);
  return fs::path(cfg.cache_dir);
}

/// Exclusive advisory lock on a cache directory. Creation with "wx" is
/// atomic, so two concurrent commands cannot both hold the lock; the file is
/// removed on destruction. A stale lock after a crash must be removed by
/// hand, which the error message spells out.
class CacheLock {
 public:
  explicit CacheLock(const fs::path& cache_dir) {
    fs::create_directories(cache_dir);
    path_ = cache_dir / ".lock";
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    require(f != nullptr, errc::cache_locked,
            "cache directory is in use (lock file " + path_.string() +
                " exists; remove it if no other run is active)");
    std::fclose(f);
    held_ = true;
  }

  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

  ~CacheLock() {
    if (held_) {
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }

 private:
  fs::path path_;
  bool held_ = false;
};

inline fs::path manifest_path(const fs::path& out_dir) { return out_dir / "manifest.jsonl"; }
inline fs::path calibration_path(const fs::path& out_dir) { return out_dir / "calibration.json"; }

/// Decode, apply the entry's augmentation recipe if it has one, optionally
/// band-limit, and standardize to the fixed clip length. This is the single
/// audio path shared by every command so cached features, segmentation, and
/// prediction all see identical preprocessing.
inline audio::AudioClip load_entry_clip(const dataset::DatasetEntry& entry,
                                        const RunConfig& cfg) {
  const auto params = cfg.feature_params();
  audio::AudioClip clip = audio::load_audio(entry.audio_path, cfg.sample_rate);
  if (entry.augmentation.has_value()) clip = audio::augment_clip(clip, *entry.augmentation);
  if (cfg.bandpass) clip = dsp::bandpass_filter(clip, cfg.bandpass_low_hz, cfg.bandpass_high_hz);
  return audio::standardize_duration(clip, params.target_seconds);
}

/// Cache-backed feature lookup. Misses are computed and written back, so a
/// training run after a partial `features` pass still completes and leaves
/// the cache warm for the next run.
class FeatureProvider {
 public:
  explicit FeatureProvider(const RunConfig& cfg)
      : cfg_(cfg), params_(cfg.feature_params()), cache_(resolve_cache_dir(cfg), params_) {}

  /// Feature matrix reshaped to the (bands, frames, 1) layout the net eats.
  Tensor<float> get(const dataset::DatasetEntry& entry) {
    Tensor<float> flat = cache_.has(entry.id, cfg_.feature_kind)
                             ? cache_.load(entry.id, cfg_.feature_kind)
                             : compute_and_store(entry);
    return Tensor<float>::from_data({flat.extent(0), flat.extent(1), 1}, flat.storage());
  }

  const features::FeatureCache& cache() const { return cache_; }

 private:
  Tensor<float> compute_and_store(const dataset::DatasetEntry& entry) {
    const audio::AudioClip clip = load_entry_clip(entry, cfg_);
    Tensor<float> values = features::extract_features(clip, cfg_.feature_kind, params_);
    cache_.store(entry.id, cfg_.feature_kind, values);
    return values;
  }

  const RunConfig& cfg_;
  features::FeatureParams params_;
  features::FeatureCache cache_;
};

inline nn::LabeledSet<float> build_labeled_set(const dataset::DatasetIndex& index,
                                               FeatureProvider& provider) {
  nn::LabeledSet<float> set;
  set.features.reserve(index.entries.size());
  set.labels.reserve(index.entries.size());
  for (const auto& e : index.entries) {
    set.features.push_back(provider.get(e));
    set.labels.push_back(e.binary_label == dataset::BinaryLabel::copd ? 1 : 0);
  }
  return set;
}

// ---------------------------------------------------------------------------
// index

struct IndexOutcome {
  dataset::DatasetIndex index;
  fs::path manifest;
};

inline IndexOutcome cmd_index(const RunConfig& cfg, const fs::path& out_dir,
                              std::ostream& log) {
  require(!cfg.dataset_dir.empty(), errc::invalid_config, "dataset_dir is not set");
  IndexOutcome out;
  out.index = dataset::build_index(cfg.dataset_dir);
  fs::create_directories(out_dir);
  out.manifest = manifest_path(out_dir);
  dataset::write_manifest(out.index, out.manifest);

  std::map<std::string, size_t> by_diagnosis;
  for (const auto& e : out.index.entries) ++by_diagnosis[dataset::diagnosis_name(e.diagnosis)];
  log << "indexed " << out.index.entries.size() << " recordings from " << cfg.dataset_dir
      << "\n";
  for (const auto& [diag, n] : by_diagnosis) log << "  " << diag << ": " << n << "\n";
  log << "  label copd: " << out.index.count_label(dataset::BinaryLabel::copd)
      << "\n  label non_copd: " << out.index.count_label(dataset::BinaryLabel::non_copd)
      << "\nwrote " << out.manifest.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// features

struct FeatureOutcome {
  size_t computed = 0;
  size_t cached = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // (id, reason)

  bool ok() const { return failures.empty(); }
};

/// Populates the cache for the configured feature kind. Decode or extraction
/// failures are collected per file instead of aborting the sweep; the command
/// still exits nonzero if anything failed so scripts notice.
inline FeatureOutcome cmd_features(const RunConfig& cfg, const fs::path& out_dir,
                                   std::ostream& log) {
  const auto index = dataset::read_manifest(manifest_path(out_dir));
  const CacheLock lock(resolve_cache_dir(cfg));
  FeatureProvider provider(cfg);

  FeatureOutcome out;
  const size_t total = index.entries.size();
  for (size_t i = 0; i < total; ++i) {
    const auto& e = index.entries[i];
    log << "[" << (i + 1) << "/" << total << "] " << e.id << " ";
    if (provider.cache().has(e.id, cfg.feature_kind)) {
      ++out.cached;
      log << "cached\n";
      continue;
    }
    try {
      provider.get(e);
      ++out.computed;
      log << "ok\n";
    } catch (const Error& err) {
      out.failures.emplace_back(e.id, err.what());
      log << "FAILED: " << err.what() << "\n";
    }
  }
  log << "features: " << out.computed << " computed, " << out.cached << " already cached, "
      << out.failures.size() << " failed\n";
  for (const auto& [id, why] : out.failures) log << "  failed " << id << ": " << why << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOutcome {
  size_t recordings = 0;
  size_t cycles = 0;
  fs::path csv;
};

/// Reads calibrated offsets when a calibration file is present, otherwise
/// segments with zero offsets.
inline segment::OffsetPair load_offsets(const fs::path& out_dir) {
  segment::OffsetPair offsets;
  const fs::path path = calibration_path(out_dir);
  if (!fs::exists(path)) return offsets;
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  require(!j.is_discarded() && j.contains("delta_start") && j.contains("delta_end"),
          errc::invalid_config, "malformed calibration file " + path.string());
  offsets.delta_start = j["delta_start"].get<double>();
  offsets.delta_end = j["delta_end"].get<double>();
  return offsets;
}

inline SegmentOutcome cmd_segment(const RunConfig& cfg, const fs::path& out_dir,
                                  std::ostream& log) {
  const auto index = dataset::read_manifest(manifest_path(out_dir));
  const segment::OffsetPair offsets = load_offsets(out_dir);
  log << "segmenting with offsets (" << format_f6(offsets.delta_start) << ", "
      << format_f6(offsets.delta_end) << ")\n";

  SegmentOutcome out;
  out.csv = out_dir / "cycles.csv";
  const fs::path tmp = out.csv.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    require(os.good(), errc::io_error, "cannot write " + tmp.string());
    os << "id,cycle_index,start_seconds,end_seconds\n";
    for (const auto& e : index.entries) {
      if (e.provenance != dataset::Provenance::original) continue;
      const audio::AudioClip clip = load_entry_clip(e, cfg);
      const auto bounds = segment::segment_cycles(clip, offsets, cfg.segmentation);
      for (size_t c = 0; c < bounds.size(); ++c) {
        os << e.id << "," << c << "," << format_f6(bounds[c].start) << ","
           << format_f6(bounds[c].end) << "\n";
      }
      ++out.recordings;
      out.cycles += bounds.size();
    }
  }
  fs::rename(tmp, out.csv);
  log << "segmented " << out.recordings << " recordings into " << out.cycles
      << " cycles\nwrote " << out.csv.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOutcome {
  segment::CalibrationResult result;
  fs::path json;
};

inline CalibrateOutcome cmd_calibrate(const RunConfig& cfg, const fs::path& out_dir,
                                      std::ostream& log) {
  const auto index = dataset::read_manifest(manifest_path(out_dir));

  std::vector<segment::MatchedPair> pairs;
  for (const auto& e : index.entries) {
    if (e.provenance != dataset::Provenance::original || e.annotation_path.empty()) continue;
    const auto annotations = dataset::parse_cycle_annotations(e.annotation_path);
    if (annotations.empty()) continue;
    const audio::AudioClip clip = load_entry_clip(e, cfg);
    const auto matched = segment::collect_matches(clip, annotations, cfg.segmentation);
    pairs.insert(pairs.end(), matched.begin(), matched.end());
  }
  log << "collected " << pairs.size() << " matched peak/annotation pairs\n";

  CalibrateOutcome out;
  out.result = segment::calibrate_offsets(pairs);
  out.json = calibration_path(out_dir);

  fs::create_directories(out_dir);
  const fs::path tmp = out.json.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    require(os.good(), errc::io_error, "cannot write " + tmp.string());
    os << "{\"delta_start\":" << format_f6(out.result.offsets.delta_start)
       << ",\"delta_end\":" << format_f6(out.result.offsets.delta_end)
       << ",\"objective_before\":" << format_f6(out.result.objective_before)
       << ",\"objective_after\":" << format_f6(out.result.objective_after)
       << ",\"n_matches\":" << out.result.n_matches << "}\n";
  }
  fs::rename(tmp, out.json);
  log << "offsets (" << format_f6(out.result.offsets.delta_start) << ", "
      << format_f6(out.result.offsets.delta_end) << "), objective "
      << format_f6(out.result.objective_before) << " -> "
      << format_f6(out.result.objective_after) << "\nwrote " << out.json.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainOutcome {
  eval::ConfusionMatrix test_confusion;
  eval::MetricsReport test_metrics;
  fs::path model;
  fs::path history;
  fs::path metrics;
};

inline TrainOutcome cmd_train(const RunConfig& cfg, const fs::path& out_dir,
                              std::ostream& log) {
  const auto index = dataset::read_manifest(manifest_path(out_dir));
  const auto split =
      dataset::split_train_test(index, cfg.test_fraction, cfg.seed, cfg.split_strategy);

  dataset::DatasetIndex train_idx = split.train;
  if (cfg.augment_balance) {
    bool warned = false;
    train_idx = dataset::apply_balance(split.train, cfg.seed, &warned);
    if (warned) log << "warning: train split has a single class; nothing to balance\n";
  }
  log << "train " << train_idx.entries.size() << " entries ("
      << train_idx.count_label(dataset::BinaryLabel::copd) << " copd), test "
      << split.test.entries.size() << " entries ("
      << split.test.count_label(dataset::BinaryLabel::copd) << " copd)\n";

  const CacheLock lock(resolve_cache_dir(cfg));
  FeatureProvider provider(cfg);
  const nn::LabeledSet<float> train_set = build_labeled_set(train_idx, provider);
  const nn::LabeledSet<float> test_set = build_labeled_set(split.test, provider);

  const nn::ModelConfig model = cfg.model_config();
  const nn::Hyper hyper{cfg.learning_rate, cfg.batch_size, cfg.epochs};
  const auto trained = nn::train(model, train_set, hyper, cfg.seed, &test_set);

  TrainOutcome out;
  fs::create_directories(out_dir);
  out.model = out_dir / "model.cpdm";
  out.history = out_dir / "history.csv";
  out.metrics = out_dir / "metrics.json";

  nn::save_model(trained.params, model, cfg.feature_kind, cfg.sample_rate, out.model);
  eval::write_history_csv(trained.history, out.history);

  std::vector<int> preds;
  std::vector<int> labels = test_set.labels;
  std::vector<double> scores;
  for (const auto& x : test_set.features) {
    const auto p = nn::predict(model, trained.params, x);
    scores.push_back(p[1]);
    preds.push_back(p[1] > p[0] ? 1 : 0);
  }
  out.test_confusion = eval::confusion(preds, labels);
  out.test_metrics = eval::metrics(out.test_confusion);
  const bool both_classes = (out.test_confusion.tp + out.test_confusion.fn) > 0 &&
                            (out.test_confusion.tn + out.test_confusion.fp) > 0;
  if (both_classes) out.test_metrics.auc = eval::roc_auc(scores, labels);
  eval::write_metrics_json(out.test_metrics, out.test_confusion, out.metrics);

  log << "test accuracy " << format_f6(out.test_metrics.accuracy) << ", weighted F1 "
      << format_f6(out.test_metrics.weighted_f1) << "\nwrote " << out.model.string() << ", "
      << out.history.string() << ", " << out.metrics.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// cv

struct CvOutcome {
  eval::CvReport report;
  fs::path json;
};

/// Cross-validates on the train split only; the held-out test split never
/// enters any fold. Balancing happens before folding, mirroring the training
/// command's view of the data.
inline CvOutcome cmd_cv(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto index = dataset::read_manifest(manifest_path(out_dir));
  const auto split =
      dataset::split_train_test(index, cfg.test_fraction, cfg.seed, cfg.split_strategy);

  dataset::DatasetIndex train_idx = split.train;
  if (cfg.augment_balance) train_idx = dataset::apply_balance(split.train, cfg.seed, nullptr);

  const CacheLock lock(resolve_cache_dir(cfg));
  FeatureProvider provider(cfg);
  const nn::ModelConfig model = cfg.model_config();
  const nn::Hyper hyper{cfg.learning_rate, cfg.batch_size, cfg.epochs};

  CvOutcome out;
  out.report = eval::cross_validate(
      model, hyper, train_idx, cfg.k, cfg.seed,
      [&provider](const dataset::DatasetEntry& e) { return provider.get(e); });

  fs::create_directories(out_dir);
  out.json = out_dir / "cv.json";
  eval::write_cv_json(out.report, out.json);

  log << cfg.k << "-fold cross-validation: accuracy " << format_f6(out.report.accuracy.mean)
      << " +- " << format_f6(out.report.accuracy.stddev) << ", weighted F1 "
      << format_f6(out.report.weighted_f1.mean) << " +- "
      << format_f6(out.report.weighted_f1.stddev) << "\nwrote " << out.json.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOutcome {
  double p_non_copd = 0.0;
  double p_copd = 0.0;
  std::string label;
  std::string json;  // the single output line, without trailing newline
};

/// The feature kind and sample rate come from the model file, never from
/// configuration, so a model trained on one representation cannot be fed
/// another at inference.
inline PredictOutcome cmd_predict(const fs::path& model_path, const fs::path& wav_path,
                                  std::ostream& log) {
  const nn::LoadedModel model = nn::load_model(model_path);

  features::FeatureParams params;
  params.sample_rate = model.sample_rate;
  require(model.config.input_h == params.n_bands &&
              model.config.input_w == params.expected_frames(),
          errc::shape_violation, "model input geometry does not match the feature frontend");

  audio::AudioClip clip = audio::load_audio(wav_path, params.sample_rate);
  clip = audio::standardize_duration(clip, params.target_seconds);
  const Tensor<float> m = features::extract_features(clip, model.feature_kind, params);
  const Tensor<float> x = Tensor<float>::from_data({m.extent(0), m.extent(1), 1}, m.storage());

  const auto p = nn::predict(model.config, model.params, x);

  PredictOutcome out;
  out.p_non_copd = p[0];
  out.p_copd = p[1];
  out.label = p[1] > p[0] ? "copd" : "non_copd";
  out.json = "{\"p_copd\":" + format_f6(out.p_copd) +
             ",\"p_non_copd\":" + format_f6(out.p_non_copd) + ",\"label\":\"" + out.label +
             "\"}";
  log << out.json << "\n";
  return out;
}

}  // namespace respkit::cli
