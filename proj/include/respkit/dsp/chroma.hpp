#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "respkit/core/tensor.hpp"
#include "respkit/dsp/stft.hpp"

namespace respkit::dsp {

struct ChromaParams {
  size_t n_bins = 40;               // pitch classes per octave
  double f_ref = 32.70319566257483; // C1; also the lowest pseudo-CQT center
};

namespace detail {

inline long long positive_mod(long long v, long long m) {
  long long r = v % m;
  return r < 0 ? r + m : r;
}

// Pitch class of a frequency on an n_bins-per-octave circle anchored at f_ref.
inline size_t pitch_class(double f, double f_ref, size_t n_bins) {
  const double cls = static_cast<double>(n_bins) * std::log2(f / f_ref);
  return static_cast<size_t>(
      positive_mod(std::llround(cls), static_cast<long long>(n_bins)));
}

inline void max_normalize_columns(Tensor<double>& m) {
  const size_t rows = m.extent(0), cols = m.extent(1);
  for (size_t t = 0; t < cols; ++t) {
    double mx = 0.0;
    for (size_t r = 0; r < rows; ++r) mx = std::max(mx, m.at(r, t));
    if (mx > 0.0)
      for (size_t r = 0; r < rows; ++r) m.at(r, t) /= mx;
  }
}

}  // namespace detail

/// STFT chroma: spectrogram bins folded onto n_bins pitch classes by octave
/// equivalence, per-frame max-normalized. Zero frames stay zero.
inline Tensor<double> chroma_stft_matrix(const Spectrogram& spec, size_t n_bins = 40,
                                         double f_ref = 32.70319566257483) {
  require(n_bins > 0, errc::invalid_spec, "n_bins must be positive");
  const size_t frames = spec.frames();
  Tensor<double> out({n_bins, frames});
  for (size_t k = 1; k < spec.bins(); ++k) {  // bin 0 is DC, no pitch class
    const size_t cls = detail::pitch_class(spec.bin_frequency(k), f_ref, n_bins);
    for (size_t t = 0; t < frames; ++t) out.at(cls, t) += spec.magnitudes.at(k, t);
  }
  detail::max_normalize_columns(out);
  return out;
}

/// Pseudo-CQT: STFT bins pooled onto geometrically spaced centers (12 per
/// octave from f_ref) before folding, so the frame grid is preserved.
inline Tensor<double> pseudo_cqt_matrix(const Spectrogram& spec,
                                        double f_ref = 32.70319566257483) {
  const double nyquist = spec.sample_rate / 2.0;
  size_t n_centers = 0;
  while (f_ref * std::pow(2.0, static_cast<double>(n_centers) / 12.0) < nyquist)
    ++n_centers;
  require(n_centers > 0, errc::invalid_spec, "sample rate too low for CQT centers");

  const size_t frames = spec.frames();
  Tensor<double> out({n_centers, frames});
  for (size_t k = 1; k < spec.bins(); ++k) {
    const double f = spec.bin_frequency(k);
    long long m = std::llround(12.0 * std::log2(f / f_ref));
    if (m < 0) m = 0;
    if (m >= static_cast<long long>(n_centers)) m = static_cast<long long>(n_centers) - 1;
    for (size_t t = 0; t < frames; ++t)
      out.at(static_cast<size_t>(m), t) += spec.magnitudes.at(k, t);
  }
  return out;
}

// Fold pseudo-CQT centers (12 per octave) onto the n_bins-per-octave class circle.
inline Tensor<double> fold_cqt_to_classes(const Tensor<double>& cqt, size_t n_bins) {
  const size_t n_centers = cqt.extent(0), frames = cqt.extent(1);
  Tensor<double> out({n_bins, frames});
  for (size_t m = 0; m < n_centers; ++m) {
    const size_t cls = static_cast<size_t>(detail::positive_mod(
        std::llround(static_cast<double>(n_bins) * static_cast<double>(m) / 12.0),
        static_cast<long long>(n_bins)));
    for (size_t t = 0; t < frames; ++t) out.at(cls, t) += cqt.at(m, t);
  }
  return out;
}

inline Tensor<double> chroma_cqt_matrix(const Spectrogram& spec, size_t n_bins = 40,
                                        double f_ref = 32.70319566257483) {
  require(n_bins > 0, errc::invalid_spec, "n_bins must be positive");
  Tensor<double> out = fold_cqt_to_classes(pseudo_cqt_matrix(spec, f_ref), n_bins);
  detail::max_normalize_columns(out);
  return out;
}

/// CENS: CQT chroma that is per-frame L1-normalized, amplitude-quantized at
/// {0.05, 0.1, 0.2, 0.4} to {0.25, 0.5, 0.75, 1.0}, smoothed by a 41-frame
/// moving average, then per-frame L2-normalized.
inline Tensor<double> chroma_cens_matrix(const Spectrogram& spec, size_t n_bins = 40,
                                         double f_ref = 32.70319566257483,
                                         size_t smooth_frames = 41) {
  Tensor<double> chroma = fold_cqt_to_classes(pseudo_cqt_matrix(spec, f_ref), n_bins);
  const size_t rows = chroma.extent(0), cols = chroma.extent(1);

  // L1 normalize, then quantize
  for (size_t t = 0; t < cols; ++t) {
    double l1 = 0.0;
    for (size_t r = 0; r < rows; ++r) l1 += chroma.at(r, t);
    for (size_t r = 0; r < rows; ++r) {
      const double v = l1 > 0.0 ? chroma.at(r, t) / l1 : 0.0;
      double q = 0.0;
      if (v >= 0.4) q = 1.0;
      else if (v >= 0.2) q = 0.75;
      else if (v >= 0.1) q = 0.5;
      else if (v >= 0.05) q = 0.25;
      chroma.at(r, t) = q;
    }
  }

  // centered moving average, zero padding outside the signal
  Tensor<double> smoothed({rows, cols});
  const long long half = static_cast<long long>(smooth_frames) / 2;
  for (size_t r = 0; r < rows; ++r) {
    for (size_t t = 0; t < cols; ++t) {
      double acc = 0.0;
      for (long long d = -half; d <= half; ++d) {
        const long long j = static_cast<long long>(t) + d;
        if (j >= 0 && j < static_cast<long long>(cols)) acc += chroma.at(r, static_cast<size_t>(j));
      }
      smoothed.at(r, t) = acc / static_cast<double>(smooth_frames);
    }
  }

  // per-frame L2 normalize
  for (size_t t = 0; t < cols; ++t) {
    double l2 = 0.0;
    for (size_t r = 0; r < rows; ++r) l2 += smoothed.at(r, t) * smoothed.at(r, t);
    l2 = std::sqrt(l2);
    if (l2 > 0.0)
      for (size_t r = 0; r < rows; ++r) smoothed.at(r, t) /= l2;
  }
  return smoothed;
}

}  // namespace respkit::dsp
