#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "respkit/core/tensor.hpp"
#include "respkit/dsp/stft.hpp"

namespace respkit::dsp {

// HTK mel scale.
inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

/// Triangular filters over FFT bins; rows sum to one.
struct FilterBank {
  Tensor<double> weights;            // (n_bands, n_fft/2 + 1)
  std::vector<double> band_centers;  // Hz, strictly increasing
};

/// Triangular mel filters with peaks at n_bands points equally spaced on the
/// mel scale between f_min and f_max. Each row is normalized to unit sum.
inline FilterBank mel_filterbank(uint32_t sample_rate, size_t n_fft = 2048,
                                 size_t n_bands = 40, double f_min = 0.0,
                                 double f_max = -1.0) {
  if (f_max < 0.0) f_max = sample_rate / 2.0;
  require(sample_rate > 0, errc::invalid_band, "sample rate must be positive");
  require(n_bands > 0, errc::invalid_band, "need at least one band");
  require(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0 + 1e-9,
          errc::invalid_band, "need 0 <= f_min < f_max <= sr/2");

  const size_t bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);

  // n_bands + 2 edge points; peak b sits at point b+1.
  std::vector<double> edges(n_bands + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_bands + 1));

  FilterBank fb;
  fb.weights = Tensor<double>({n_bands, bins});
  fb.band_centers.resize(n_bands);

  for (size_t b = 0; b < n_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    fb.band_centers[b] = mid;
    double sum = 0.0;
    for (size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double up = (f - lo) / (mid - lo);
      double down = (hi - f) / (hi - mid);
      double w = std::max(0.0, std::min(up, down));
      fb.weights.at(b, k) = w;
      sum += w;
    }
    require(sum > 0.0, errc::invalid_band,
            "filter " + std::to_string(b) + " covers no FFT bin");
    for (size_t k = 0; k < bins; ++k) fb.weights.at(b, k) /= sum;
  }
  return fb;
}

/// Orthonormal DCT-II: out[k] = s(k) * sum_n x[n] cos(pi*(2n+1)*k / (2N)),
/// s(0) = sqrt(1/N), s(k>0) = sqrt(2/N).
inline void dct2_orthonormal(const double* x, double* out, size_t n) {
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    out[k] = (k == 0 ? s0 : sk) * acc;
  }
}

/// Inverse of dct2_orthonormal (orthonormal DCT-III).
inline void dct3_orthonormal(const double* x, double* out, size_t n) {
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) {
    double acc = s0 * x[0];
    for (size_t k = 1; k < n; ++k)
      acc += sk * x[k] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    out[i] = acc;
  }
}

/// log(filterbank . magnitudes^2 + eps), one column per frame.
inline Tensor<double> log_mel_matrix(const Spectrogram& spec, const FilterBank& fb,
                                     double eps = 1e-10) {
  const size_t n_bands = fb.weights.extent(0);
  const size_t bins = spec.bins();
  require(fb.weights.extent(1) == bins, errc::shape_mismatch,
          "filterbank bins do not match spectrogram");
  const size_t frames = spec.frames();
  Tensor<double> out({n_bands, frames});
  std::vector<double> power(bins);
  for (size_t t = 0; t < frames; ++t) {
    for (size_t k = 0; k < bins; ++k) {
      const double m = spec.magnitudes.at(k, t);
      power[k] = m * m;
    }
    for (size_t b = 0; b < n_bands; ++b) {
      const double* w = fb.weights.data() + b * bins;
      double acc = 0.0;
      for (size_t k = 0; k < bins; ++k) acc += w[k] * power[k];
      out.at(b, t) = std::log(acc + eps);
    }
  }
  return out;
}

}  // namespace respkit::dsp
