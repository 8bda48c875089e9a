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
#include "respkit/core/tensor.hpp"
#include "respkit/features/feature.hpp"
#include "respkit/nn/model.hpp"

namespace respkit::nn {

inline constexpr char kModelMagic[4] = {'C', 'P', 'D', 'M'};
inline constexpr uint16_t kModelVersion = 1;

struct LoadedModel {
  ModelConfig config;
  ParamSet<float> params;
  features::FeatureKind feature_kind = features::FeatureKind::mfcc;
  uint32_t sample_rate = 22050;
};

namespace detail {

inline void write_tensor(std::ostream& os, const Tensor<float>& t) {
  require(t.rank() <= 255, errc::invalid_spec, "model: tensor rank too large");
  write_u8(os, static_cast<uint8_t>(t.rank()));
  for (size_t i = 0; i < t.rank(); ++i) {
    write_u32le(os, static_cast<uint32_t>(t.extent(i)));
  }
  for (size_t i = 0; i < t.size(); ++i) write_f32le(os, t[i]);
}

inline Tensor<float> read_tensor(std::istream& is) {
  const uint8_t rank = read_u8(is, errc::corrupt_model);
  require(rank >= 1, errc::corrupt_model, "model: tensor without extents");
  std::vector<size_t> shape(rank);
  size_t count = 1;
  for (auto& e : shape) {
    e = read_u32le(is, errc::corrupt_model);
    require(e >= 1 && e <= (1u << 24), errc::corrupt_model, "model: implausible tensor extent");
    count *= e;
  }
  std::vector<float> data(count);
  for (float& v : data) v = read_f32le(is, errc::corrupt_model);
  return Tensor<float>::from_data(std::move(shape), std::move(data));
}

}  // namespace detail

/// Layout: magic, version u16, architecture u8, feature kind u8, input dims
/// and class count u32, feature sample rate u32, layer count u32, fixed-width
/// layer records, then the learnable tensors and running buffers in layer
/// order as little-endian f32. The sample rate travels with the weights so
/// inference can rebuild the exact feature frontend the model was trained on.
inline void save_model(const ParamSet<float>& params, const ModelConfig& config,
                       features::FeatureKind kind, uint32_t sample_rate,
                       const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    require(os.good(), errc::io_error, "cannot open " + tmp.string() + " for writing");
    os.write(kModelMagic, 4);
    write_u16le(os, kModelVersion);
    write_u8(os, static_cast<uint8_t>(config.architecture));
    write_u8(os, static_cast<uint8_t>(kind));
    write_u32le(os, config.input_h);
    write_u32le(os, config.input_w);
    write_u32le(os, config.input_c);
    write_u32le(os, config.n_classes);
    write_u32le(os, sample_rate);
    write_u32le(os, static_cast<uint32_t>(config.layers.size()));
    for (const LayerSpec& l : config.layers) {
      write_u8(os, static_cast<uint8_t>(l.op));
      write_u32le(os, l.units);
      write_u32le(os, l.kernel);
      write_u32le(os, l.stride);
      write_u8(os, l.same_pad);
      write_f32le(os, l.rate);
    }
    write_u32le(os, static_cast<uint32_t>(params.weights.size()));
    for (const auto& w : params.weights) detail::write_tensor(os, w);
    write_u32le(os, static_cast<uint32_t>(params.buffers.size()));
    for (const auto& b : params.buffers) detail::write_tensor(os, b);
    require(os.good(), errc::io_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, errc::io_error, "cannot move model into place at " + path.string());
}

inline LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), errc::io_error, "cannot open " + path.string());

  char magic[4] = {};
  is.read(magic, 4);
  require(is.gcount() == 4 && std::equal(magic, magic + 4, kModelMagic), errc::corrupt_model,
          "not a model file: " + path.string());
  const uint16_t version = read_u16le(is, errc::corrupt_model);
  require(version == kModelVersion, errc::version_mismatch,
          "unsupported model version " + std::to_string(version));

  LoadedModel model;
  const uint8_t arch = read_u8(is, errc::corrupt_model);
  require(arch <= static_cast<uint8_t>(Architecture::blocknet), errc::corrupt_model,
          "model: unknown architecture tag");
  model.config.architecture = static_cast<Architecture>(arch);
  const uint8_t kind = read_u8(is, errc::corrupt_model);
  require(kind <= static_cast<uint8_t>(features::FeatureKind::chroma_cens), errc::corrupt_model,
          "model: unknown feature kind tag");
  model.feature_kind = static_cast<features::FeatureKind>(kind);

  model.config.input_h = read_u32le(is, errc::corrupt_model);
  model.config.input_w = read_u32le(is, errc::corrupt_model);
  model.config.input_c = read_u32le(is, errc::corrupt_model);
  model.config.n_classes = read_u32le(is, errc::corrupt_model);
  model.sample_rate = read_u32le(is, errc::corrupt_model);
  require(model.sample_rate > 0, errc::corrupt_model, "model: zero sample rate");
  const uint32_t n_layers = read_u32le(is, errc::corrupt_model);
  require(n_layers <= 1024, errc::corrupt_model, "model: implausible layer count");
  for (uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const uint8_t op = read_u8(is, errc::corrupt_model);
    require(op <= static_cast<uint8_t>(LayerOp::dense), errc::corrupt_model,
            "model: unknown layer op");
    l.op = static_cast<LayerOp>(op);
    l.units = read_u32le(is, errc::corrupt_model);
    l.kernel = read_u32le(is, errc::corrupt_model);
    l.stride = read_u32le(is, errc::corrupt_model);
    l.same_pad = read_u8(is, errc::corrupt_model);
    l.rate = read_f32le(is, errc::corrupt_model);
    model.config.layers.push_back(l);
  }

  const uint32_t n_weights = read_u32le(is, errc::corrupt_model);
  require(n_weights <= 4096, errc::corrupt_model, "model: implausible tensor count");
  for (uint32_t i = 0; i < n_weights; ++i) {
    model.params.weights.push_back(detail::read_tensor(is));
  }
  const uint32_t n_buffers = read_u32le(is, errc::corrupt_model);
  require(n_buffers <= 4096, errc::corrupt_model, "model: implausible buffer count");
  for (uint32_t i = 0; i < n_buffers; ++i) {
    model.params.buffers.push_back(detail::read_tensor(is));
  }

  // The stored chain must be internally consistent before anyone runs it.
  const auto shapes = infer_shapes(model.config);
  (void)shapes;
  return model;
}

}  // namespace respkit::nn
