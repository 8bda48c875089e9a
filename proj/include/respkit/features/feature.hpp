#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "respkit/audio/clip.hpp"
#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/dsp/chroma.hpp"
#include "respkit/dsp/mel.hpp"
#include "respkit/dsp/stft.hpp"

namespace respkit::features {

enum class FeatureKind : uint8_t {
  mfcc = 0,
  mel_spectrogram = 1,
  chroma_stft = 2,
  chroma_cqt = 3,
  chroma_cens = 4
};

inline const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::mfcc: return "mfcc";
    case FeatureKind::mel_spectrogram: return "mel_spectrogram";
    case FeatureKind::chroma_stft: return "chroma_stft";
    case FeatureKind::chroma_cqt: return "chroma_cqt";
    case FeatureKind::chroma_cens: return "chroma_cens";
  }
  return "?";
}

inline FeatureKind feature_kind_from_name(const std::string& name) {
  for (FeatureKind k : {FeatureKind::mfcc, FeatureKind::mel_spectrogram,
                        FeatureKind::chroma_stft, FeatureKind::chroma_cqt,
                        FeatureKind::chroma_cens}) {
    if (name == feature_kind_name(k)) return k;
  }
  raise(errc::invalid_config, "unknown feature kind '" + name + "'");
}

/// Everything that determines feature values. Hashed into cache keys so a
/// parameter change invalidates stale cache files.
struct FeatureParams {
  uint32_t sample_rate = 22050;
  double target_seconds = 20.0;
  size_t n_fft = 2048;
  size_t window_length = 2048;
  size_t hop = 512;
  size_t n_bands = 40;    // mel bands == retained MFCC coefficients
  size_t chroma_bins = 40;
  double log_floor = 1e-10;

  uint64_t param_hash() const {
    std::string s = std::to_string(sample_rate) + "|" + std::to_string(target_seconds) +
                    "|" + std::to_string(n_fft) + "|" + std::to_string(window_length) +
                    "|" + std::to_string(hop) + "|" + std::to_string(n_bands) + "|" +
                    std::to_string(chroma_bins) + "|" + std::to_string(log_floor);
    return fnv1a64_str(s);
  }

  size_t expected_frames() const {
    const size_t n = static_cast<size_t>(
        std::llround(target_seconds * static_cast<double>(sample_rate)));
    return 1 + n / hop;
  }
};

inline Tensor<double> mel_spectrogram_matrix(const audio::AudioClip& clip,
                                             const FeatureParams& p) {
  const dsp::Spectrogram spec =
      dsp::stft(clip, {p.n_fft, p.window_length, p.hop, true});
  const dsp::FilterBank fb =
      dsp::mel_filterbank(p.sample_rate, p.n_fft, p.n_bands, 0.0, -1.0);
  return dsp::log_mel_matrix(spec, fb, p.log_floor);
}

inline Tensor<double> mfcc_matrix(const audio::AudioClip& clip, const FeatureParams& p) {
  Tensor<double> logmel = mel_spectrogram_matrix(clip, p);
  const size_t rows = logmel.extent(0), cols = logmel.extent(1);
  Tensor<double> out({rows, cols});
  std::vector<double> frame(rows), coef(rows);
  for (size_t t = 0; t < cols; ++t) {
    for (size_t r = 0; r < rows; ++r) frame[r] = logmel.at(r, t);
    dsp::dct2_orthonormal(frame.data(), coef.data(), rows);
    for (size_t r = 0; r < rows; ++r) out.at(r, t) = coef[r];
  }
  return out;
}

/// Dispatch to a feature family's pipeline and enforce the fixed geometry.
/// The clip must already be standardized (resampled + fixed duration).
inline Tensor<float> extract_features(const audio::AudioClip& clip, FeatureKind kind,
                                      const FeatureParams& p = {}) {
  require(clip.sample_rate == p.sample_rate, errc::shape_violation,
          "clip not resampled to the pipeline rate");
  const size_t expected_samples = static_cast<size_t>(
      std::llround(p.target_seconds * static_cast<double>(p.sample_rate)));
  require(clip.samples.size() == expected_samples, errc::shape_violation,
          "clip not standardized to " + std::to_string(p.target_seconds) + " s");

  Tensor<double> values;
  switch (kind) {
    case FeatureKind::mfcc:
      values = mfcc_matrix(clip, p);
      break;
    case FeatureKind::mel_spectrogram:
      values = mel_spectrogram_matrix(clip, p);
      break;
    case FeatureKind::chroma_stft:
      values = dsp::chroma_stft_matrix(
          dsp::stft(clip, {p.n_fft, p.window_length, p.hop, true}), p.chroma_bins);
      break;
    case FeatureKind::chroma_cqt:
      values = dsp::chroma_cqt_matrix(
          dsp::stft(clip, {p.n_fft, p.window_length, p.hop, true}), p.chroma_bins);
      break;
    case FeatureKind::chroma_cens:
      values = dsp::chroma_cens_matrix(
          dsp::stft(clip, {p.n_fft, p.window_length, p.hop, true}), p.chroma_bins);
      break;
  }

  require(values.rank() == 2 && values.extent(0) == p.n_bands &&
              values.extent(1) == p.expected_frames(),
          errc::shape_violation,
          "feature pipeline produced " + values.shape_string());
  require(values.all_finite(), errc::shape_violation, "non-finite feature values");
  return values.cast<float>();
}

}  // namespace respkit::features
