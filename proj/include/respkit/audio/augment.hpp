#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/audio/resample.hpp"
#include "respkit/core/error.hpp"
#include "respkit/core/rng.hpp"

namespace respkit::audio {

enum class AugmentMethod : uint8_t { time_shift = 0, additive_noise = 1, time_stretch = 2 };

inline const char* augment_method_name(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::time_shift: return "time_shift";
    case AugmentMethod::additive_noise: return "additive_noise";
    case AugmentMethod::time_stretch: return "time_stretch";
  }
  return "?";
}

/// Recipe for one derived clip. `magnitude` is method-specific: shift in
/// seconds, SNR in dB, or stretch ratio.
struct AugmentationSpec {
  AugmentMethod method = AugmentMethod::time_shift;
  double magnitude = 0.0;
  uint64_t seed = 0;

  void validate(double clip_duration_seconds) const {
    switch (method) {
      case AugmentMethod::time_shift:
        require(std::abs(magnitude) < clip_duration_seconds, errc::invalid_spec,
                "time shift must be shorter than the clip");
        break;
      case AugmentMethod::additive_noise:
        require(magnitude >= 10.0 && magnitude <= 40.0, errc::invalid_spec,
                "noise SNR must lie in [10, 40] dB");
        break;
      case AugmentMethod::time_stretch:
        require(magnitude >= 0.8 && magnitude <= 1.2, errc::invalid_spec,
                "stretch ratio must lie in [0.8, 1.2]");
        break;
    }
  }
};

namespace detail {

inline AudioClip circular_shift(const AudioClip& clip, double shift_seconds) {
  const long long n = static_cast<long long>(clip.samples.size());
  long long k = std::llround(shift_seconds * static_cast<double>(clip.sample_rate)) % n;
  if (k < 0) k += n;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(clip.samples.size());
  for (long long i = 0; i < n; ++i)
    out.samples[static_cast<size_t>((i + k) % n)] = clip.samples[static_cast<size_t>(i)];
  return out;
}

inline AudioClip add_noise(const AudioClip& clip, double snr_db, uint64_t seed) {
  const double p_signal = mean_power(clip.samples);
  const double p_noise = p_signal * std::pow(10.0, -snr_db / 10.0);
  const double sigma = std::sqrt(p_noise);
  Pcg32 rng(seed, 0x6e6f6973);  // independent noise stream per spec seed
  AudioClip out = clip;
  for (float& s : out.samples) s += static_cast<float>(sigma * rng.normal());
  return out;
}

inline AudioClip stretch(const AudioClip& clip, double ratio) {
  // resample by the ratio (ratio > 1 slows the clip down, producing more
  // samples), then trim or zero-pad at the tail back to the input length
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples = resample_ratio(clip.samples, ratio);
  out.samples.resize(clip.samples.size(), 0.0f);
  return out;
}

}  // namespace detail

/// Apply one augmentation. Output length always equals input length, and the
/// result is a pure function of (clip, spec).
inline AudioClip augment_clip(const AudioClip& clip, const AugmentationSpec& spec) {
  require(!clip.samples.empty(), errc::empty_clip, "cannot augment an empty clip");
  spec.validate(clip.duration_seconds());
  switch (spec.method) {
    case AugmentMethod::time_shift: return detail::circular_shift(clip, spec.magnitude);
    case AugmentMethod::additive_noise: return detail::add_noise(clip, spec.magnitude, spec.seed);
    case AugmentMethod::time_stretch: return detail::stretch(clip, spec.magnitude);
  }
  raise(errc::invalid_spec, "unknown augmentation method");
}

}  // namespace respkit::audio
