#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/core/tensor.hpp"
#include "respkit/dsp/fft.hpp"

namespace respkit::dsp {

/// One-sided magnitude spectrogram: (n_fft/2 + 1) rows by `frames` columns.
struct Spectrogram {
  Tensor<double> magnitudes;  // (bins, frames)
  size_t frame_hop = 0;       // samples
  size_t window_length = 0;   // samples
  size_t n_fft = 0;
  uint32_t sample_rate = 0;

  size_t bins() const { return magnitudes.extent(0); }
  size_t frames() const { return magnitudes.extent(1); }
  double bin_frequency(size_t k) const {
    return static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
  }
  double hop_seconds() const {
    return static_cast<double>(frame_hop) / sample_rate;
  }
};

struct StftParams {
  size_t n_fft = 2048;
  size_t window_length = 2048;  // zero-padded to n_fft when shorter
  size_t hop = 512;
  bool centered = true;
};

/// Periodic Hann window.
inline std::vector<double> hann_window(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n));
  return w;
}

// Reflect index into [0, n) without repeating the edge sample.
inline size_t reflect_index(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= n) m = period - m;
  return static_cast<size_t>(m);
}

/// Windowed FFT magnitudes per hop. With centered framing, column t holds the
/// spectrum of the frame centered at sample t*hop (reflect-padded edges), and
/// the frame count is 1 + floor(num_samples / hop).
inline Spectrogram stft(const audio::AudioClip& clip, const StftParams& p = {}) {
  require(!clip.samples.empty(), errc::empty_clip, "stft of an empty clip");
  require(is_power_of_two(p.n_fft), errc::invalid_spec, "n_fft must be a power of two");
  require(p.window_length > 0 && p.window_length <= p.n_fft, errc::invalid_spec,
          "window must fit the FFT size");
  require(p.hop > 0, errc::invalid_spec, "hop must be positive");

  const long long n = static_cast<long long>(clip.samples.size());
  const size_t bins = p.n_fft / 2 + 1;
  size_t frames;
  if (p.centered) {
    frames = 1 + clip.samples.size() / p.hop;
  } else {
    require(clip.samples.size() >= p.window_length, errc::invalid_spec,
            "clip shorter than one frame");
    frames = 1 + (clip.samples.size() - p.window_length) / p.hop;
  }

  const std::vector<double> window = hann_window(p.window_length);
  const long long half = static_cast<long long>(p.window_length) / 2;

  Spectrogram spec;
  spec.magnitudes = Tensor<double>({bins, frames});
  spec.frame_hop = p.hop;
  spec.window_length = p.window_length;
  spec.n_fft = p.n_fft;
  spec.sample_rate = clip.sample_rate;

  std::vector<double> frame(p.window_length);
  std::vector<double> mags(bins);
  std::vector<std::complex<double>> work;
  for (size_t t = 0; t < frames; ++t) {
    const long long start = p.centered
                                ? static_cast<long long>(t * p.hop) - half
                                : static_cast<long long>(t * p.hop);
    for (size_t i = 0; i < p.window_length; ++i) {
      const long long idx = start + static_cast<long long>(i);
      double s;
      if (idx >= 0 && idx < n) {
        s = clip.samples[static_cast<size_t>(idx)];
      } else if (p.centered) {
        s = clip.samples[reflect_index(idx, n)];
      } else {
        s = 0.0;
      }
      frame[i] = s * window[i];
    }
    real_fft_magnitudes(frame.data(), p.window_length, p.n_fft, work, mags.data());
    for (size_t k = 0; k < bins; ++k) spec.magnitudes.at(k, t) = mags[k];
  }
  return spec;
}

}  // namespace respkit::dsp
