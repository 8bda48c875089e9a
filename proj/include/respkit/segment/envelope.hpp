#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/core/error.hpp"
#include "respkit/dsp/stft.hpp"

namespace respkit::segment {

/// Frame-rate energy curve derived from a short-time spectrum.
struct Envelope {
  std::vector<double> values;
  double frame_hop_seconds = 0.0;
  double origin_time = 0.0;  // time of frame 0, seconds

  double time_of(double frame) const { return origin_time + frame * frame_hop_seconds; }
  size_t size() const { return values.size(); }
};

/// Frequency-squared weighted magnitude sum per frame. Weighting by f^2
/// suppresses the low-frequency rumble that otherwise dominates breath audio.
inline Envelope envelope_from_spectrogram(const dsp::Spectrogram& spec) {
  Envelope env;
  env.frame_hop_seconds = spec.hop_seconds();
  env.origin_time = 0.0;
  env.values.resize(spec.frames(), 0.0);
  for (size_t t = 0; t < spec.frames(); ++t) {
    double acc = 0.0;
    for (size_t k = 0; k < spec.bins(); ++k) {
      const double f = spec.bin_frequency(k);
      acc += spec.magnitudes.at(k, t) * f * f;
    }
    env.values[t] = acc;
  }
  return env;
}

/// 50 ms analysis window (zero-padded to the FFT size), 25 ms hop.
inline Envelope energy_envelope(const audio::AudioClip& clip) {
  require(!clip.samples.empty(), errc::empty_clip, "energy_envelope: empty clip");
  dsp::StftParams params;
  params.window_length = static_cast<size_t>(std::floor(0.05 * clip.sample_rate));
  params.hop = static_cast<size_t>(std::floor(0.025 * clip.sample_rate));
  params.n_fft = 2048;
  while (params.n_fft < params.window_length) params.n_fft *= 2;
  params.centered = true;
  return envelope_from_spectrogram(dsp::stft(clip, params));
}

/// Normalized kernel exp(-i^2 / (2 sigma^2)) for i in [-radius, radius],
/// radius = round(4 sigma). sigma is in frames.
inline std::vector<double> gaussian_kernel(double sigma_frames) {
  require(sigma_frames > 0.0, errc::invalid_spec, "gaussian_kernel: sigma must be positive");
  const long long radius = std::max(1LL, std::llround(4.0 * sigma_frames));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i / sigma_frames) * (i / sigma_frames));
    kernel[static_cast<size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

namespace detail {

// Reflection with edge repeat: ... x1 x0 | x0 x1 ... xn-1 | xn-1 xn-2 ...
// This boundary keeps the total mass of the signal invariant under
// convolution with a normalized kernel.
inline size_t reflect_repeat(long long i, long long n) {
  const long long period = 2 * n;
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<size_t>(m < n ? m : period - 1 - m);
}

}  // namespace detail

inline Envelope gaussian_smooth(const Envelope& env, double sigma_seconds = 0.25) {
  require(env.frame_hop_seconds > 0.0, errc::invalid_spec,
          "gaussian_smooth: envelope has no frame hop");
  require(sigma_seconds > 0.0, errc::invalid_spec, "gaussian_smooth: sigma must be positive");
  const auto kernel = gaussian_kernel(sigma_seconds / env.frame_hop_seconds);
  const long long radius = static_cast<long long>(kernel.size() / 2);
  const long long n = static_cast<long long>(env.values.size());

  Envelope out = env;
  for (long long t = 0; t < n; ++t) {
    double acc = 0.0;
    for (long long j = -radius; j <= radius; ++j) {
      acc += kernel[static_cast<size_t>(j + radius)] *
             env.values[detail::reflect_repeat(t + j, n)];
    }
    out.values[static_cast<size_t>(t)] = acc;
  }
  return out;
}

}  // namespace respkit::segment
