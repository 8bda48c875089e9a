#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/io.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/features/feature.hpp"

namespace respkit::features {

inline constexpr char kCacheMagic[4] = {'C', 'P', 'D', 'F'};
inline constexpr uint16_t kCacheVersion = 1;

/// Serialized feature matrix: magic "CPDF", version u16, kind u8, rows u32,
/// cols u32, sample_rate u32, then rows*cols little-endian f32, row-major.
inline void write_feature_file(const std::filesystem::path& path, FeatureKind kind,
                               const Tensor<float>& values, uint32_t sample_rate) {
  require(values.rank() == 2, errc::shape_violation, "feature matrix must be 2-D");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), errc::io_error, "cannot open " + path.string() + " for writing");
  os.write(kCacheMagic, 4);
  write_u16le(os, kCacheVersion);
  write_u8(os, static_cast<uint8_t>(kind));
  write_u32le(os, static_cast<uint32_t>(values.extent(0)));
  write_u32le(os, static_cast<uint32_t>(values.extent(1)));
  write_u32le(os, sample_rate);
  for (size_t i = 0; i < values.size(); ++i) write_f32le(os, values[i]);
  require(os.good(), errc::io_error, "cannot write " + path.string());
}

struct CachedFeature {
  FeatureKind kind = FeatureKind::mfcc;
  uint32_t sample_rate = 0;
  Tensor<float> values;
};

inline CachedFeature read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), errc::io_error, "cannot open " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  require(is.gcount() == 4 && std::equal(magic, magic + 4, kCacheMagic),
          errc::corrupt_file, "bad feature-file magic in " + path.string());
  const uint16_t version = read_u16le(is);
  require(version == kCacheVersion, errc::version_mismatch,
          "unsupported feature-file version " + std::to_string(version));
  const uint8_t kind_raw = read_u8(is);
  require(kind_raw <= 4, errc::corrupt_file, "bad feature kind in " + path.string());

  CachedFeature out;
  out.kind = static_cast<FeatureKind>(kind_raw);
  const uint32_t rows = read_u32le(is);
  const uint32_t cols = read_u32le(is);
  out.sample_rate = read_u32le(is);
  require(rows > 0 && cols > 0 && rows < (1u << 20) && cols < (1u << 20),
          errc::corrupt_file, "implausible feature shape in " + path.string());
  std::vector<float> data(static_cast<size_t>(rows) * cols);
  for (float& v : data) v = read_f32le(is);
  out.values = Tensor<float>::from_data({rows, cols}, std::move(data));
  return out;
}

/// Maps (recording id, kind, params) to a stable cache filename. The hash
/// folds in the parameter set, so changed parameters miss the old files.
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, FeatureParams params)
      : dir_(std::move(dir)), params_(params) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const FeatureParams& params() const { return params_; }

  std::filesystem::path path_for(const std::string& recording_id, FeatureKind kind) const {
    const uint64_t h = fnv1a64_str(recording_id, params_.param_hash());
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    std::string name = sanitize(recording_id);
    name += ".";
    name += feature_kind_name(kind);
    name += ".";
    name += hex;
    name += ".cpdf";
    return dir_ / name;
  }

  bool has(const std::string& recording_id, FeatureKind kind) const {
    return std::filesystem::exists(path_for(recording_id, kind));
  }

  Tensor<float> load(const std::string& recording_id, FeatureKind kind) const {
    return read_feature_file(path_for(recording_id, kind)).values;
  }

  void store(const std::string& recording_id, FeatureKind kind,
             const Tensor<float>& values) const {
    // write-then-rename so readers never observe a half-written file
    const std::filesystem::path final_path = path_for(recording_id, kind);
    const std::filesystem::path tmp = final_path.string() + ".tmp";
    write_feature_file(tmp, kind, values, params_.sample_rate);
    std::filesystem::rename(tmp, final_path);
  }

 private:
  static std::string sanitize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
      out += ok ? c : '_';
    }
    return out;
  }

  std::filesystem::path dir_;
  FeatureParams params_;
};

}  // namespace respkit::features
