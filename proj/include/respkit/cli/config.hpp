#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "respkit/core/error.hpp"
#include "respkit/dataset/split.hpp"
#include "respkit/features/feature.hpp"
#include "respkit/nn/model.hpp"
#include "respkit/segment/calibrate.hpp"

namespace respkit::cli {

/// Everything a pipeline run needs, with working defaults for all of it
/// except `dataset_dir`. A config file only has to name the dataset to get
/// the standard regime: MFCC features, the four-conv global-pooling net,
/// Adam at 1e-3, batch 64, 14 epochs, balanced augmentation on the train
/// split, recording-level 90/10 split, 10-fold cross-validation.
struct RunConfig {
  std::string dataset_dir;
  std::string cache_dir = "cache";

  features::FeatureKind feature_kind = features::FeatureKind::mfcc;
  uint32_t sample_rate = 22050;

  double test_fraction = 0.10;
  dataset::SplitStrategy split_strategy = dataset::SplitStrategy::recording_level;
  size_t k = 10;
  uint64_t seed = 20250101;

  nn::Architecture architecture = nn::Architecture::gapnet;
  double learning_rate = 0.001;
  size_t batch_size = 64;
  size_t epochs = 14;
  bool augment_balance = true;

  bool bandpass = false;
  double bandpass_low_hz = 100.0;
  double bandpass_high_hz = 2000.0;

  segment::SegmentationParams segmentation;

  features::FeatureParams feature_params() const {
    features::FeatureParams p;
    p.sample_rate = sample_rate;
    return p;
  }

  nn::ModelConfig model_config() const {
    const auto p = feature_params();
    nn::ModelConfig cfg = architecture == nn::Architecture::gapnet
                              ? nn::ModelConfig::gapnet()
                              : nn::ModelConfig::blocknet();
    cfg.input_h = p.n_bands;
    cfg.input_w = p.expected_frames();
    cfg.input_c = 1;
    return cfg;
  }

  /// Rejects out-of-range values up front, before any command touches disk.
  void validate() const {
    require(sample_rate >= 1000 && sample_rate <= 192000, errc::invalid_config,
            "sample_rate must lie in [1000, 192000]");
    require(test_fraction > 0.0 && test_fraction < 1.0, errc::invalid_config,
            "test_fraction must lie in (0, 1)");
    require(k >= 2, errc::invalid_config, "k must be at least 2");
    require(learning_rate > 0.0 && learning_rate <= 1.0, errc::invalid_config,
            "learning_rate must lie in (0, 1]");
    require(batch_size >= 1, errc::invalid_config, "batch_size must be at least 1");
    require(epochs >= 1, errc::invalid_config, "epochs must be at least 1");
    require(segmentation.sigma_seconds > 0.0, errc::invalid_config,
            "sigma_seconds must be positive");
    require(segmentation.min_distance_seconds > 0.0, errc::invalid_config,
            "min_distance_seconds must be positive");
    require(segmentation.min_prominence_fraction >= 0.0 &&
                segmentation.min_prominence_fraction <= 1.0,
            errc::invalid_config, "min_prominence_fraction must lie in [0, 1]");
    require(segmentation.relative_height >= 0.0 && segmentation.relative_height <= 1.0,
            errc::invalid_config, "relative_height must lie in [0, 1]");
    if (bandpass) {
      require(bandpass_low_hz > 0.0 && bandpass_low_hz < bandpass_high_hz,
              errc::invalid_config, "bandpass cutoffs must satisfy 0 < low < high");
      require(bandpass_high_hz < sample_rate / 2.0, errc::invalid_config,
              "bandpass high cutoff must stay below the Nyquist rate");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  raise(errc::invalid_config, key + " expects a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
  size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    raise(errc::invalid_config, key + " expects a number, got '" + v + "'");
  }
  require(pos == v.size(), errc::invalid_config,
          key + " has trailing characters: '" + v + "'");
  return out;
}

inline uint64_t parse_u64(const std::string& v, const std::string& key) {
  require(!v.empty() && v.find_first_not_of("0123456789") == std::string::npos,
          errc::invalid_config, key + " expects a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    raise(errc::invalid_config, key + " is out of range: '" + v + "'");
  }
}

}  // namespace detail

/// Applies one `key = value` assignment to `cfg`. Unknown keys are an error
/// rather than a silent no-op; a typoed setting should never run with the
/// default behind the user's back.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_u64;

  if (key == "dataset_dir") {
    cfg.dataset_dir = value;
  } else if (key == "cache_dir") {
    cfg.cache_dir = value;
  } else if (key == "feature_kind") {
    cfg.feature_kind = features::feature_kind_from_name(value);
  } else if (key == "sample_rate") {
    cfg.sample_rate = static_cast<uint32_t>(parse_u64(value, key));
  } else if (key == "test_fraction") {
    cfg.test_fraction = parse_double(value, key);
  } else if (key == "split_strategy") {
    if (value == "recording_level")
      cfg.split_strategy = dataset::SplitStrategy::recording_level;
    else if (value == "patient_grouped")
      cfg.split_strategy = dataset::SplitStrategy::patient_grouped;
    else
      raise(errc::invalid_config, "unknown split_strategy '" + value + "'");
  } else if (key == "k") {
    cfg.k = static_cast<size_t>(parse_u64(value, key));
  } else if (key == "seed") {
    cfg.seed = parse_u64(value, key);
  } else if (key == "architecture") {
    if (value == "gapnet")
      cfg.architecture = nn::Architecture::gapnet;
    else if (value == "blocknet")
      cfg.architecture = nn::Architecture::blocknet;
    else
      raise(errc::invalid_config, "unknown architecture '" + value + "'");
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double(value, key);
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<size_t>(parse_u64(value, key));
  } else if (key == "epochs") {
    cfg.epochs = static_cast<size_t>(parse_u64(value, key));
  } else if (key == "augment_balance") {
    cfg.augment_balance = parse_bool(value, key);
  } else if (key == "bandpass") {
    cfg.bandpass = parse_bool(value, key);
  } else if (key == "bandpass_low_hz") {
    cfg.bandpass_low_hz = parse_double(value, key);
  } else if (key == "bandpass_high_hz") {
    cfg.bandpass_high_hz = parse_double(value, key);
  } else if (key == "sigma_seconds") {
    cfg.segmentation.sigma_seconds = parse_double(value, key);
  } else if (key == "min_distance_seconds") {
    cfg.segmentation.min_distance_seconds = parse_double(value, key);
  } else if (key == "min_prominence_fraction") {
    cfg.segmentation.min_prominence_fraction = parse_double(value, key);
  } else if (key == "relative_height") {
    cfg.segmentation.relative_height = parse_double(value, key);
  } else {
    raise(errc::invalid_config, "unknown config key '" + key + "'");
  }
}

/// Parses `key = value` lines. `#` starts a comment (full line or trailing),
/// blank lines are skipped. The parsed config is range-checked before return.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos, errc::invalid_config,
            "line " + std::to_string(lineno) + " is not a key = value pair");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    require(!key.empty(), errc::invalid_config,
            "line " + std::to_string(lineno) + " has an empty key");
    require(!value.empty(), errc::invalid_config, "key '" + key + "' has an empty value");
    apply_setting(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), errc::io_error, "cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace respkit::cli
