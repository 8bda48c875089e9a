#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit::audio {

/// Mono waveform in [-1, 1] plus its sample rate; the unit of ingestion and DSP.
struct AudioClip {
  std::vector<float> samples;
  uint32_t sample_rate = 0;

  double duration_seconds() const {
    return sample_rate == 0 ? 0.0
                            : static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Pad with trailing zeros or truncate at the tail so the clip lasts exactly
/// `target_seconds`. Idempotent.
inline AudioClip standardize_duration(const AudioClip& clip, double target_seconds = 20.0) {
  require(!clip.samples.empty(), errc::empty_clip, "cannot standardize an empty clip");
  require(clip.sample_rate > 0, errc::empty_clip, "clip has no sample rate");
  const size_t target = static_cast<size_t>(
      std::llround(target_seconds * static_cast<double>(clip.sample_rate)));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples = clip.samples;
  out.samples.resize(target, 0.0f);
  return out;
}

inline double rms(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double mean_power(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace respkit::audio
