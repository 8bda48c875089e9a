#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit::audio {

/// Band-limited rate conversion with a Hann-windowed sinc kernel. The kernel
/// is normalized per output sample, so ratio 1.0 is the identity and DC gain
/// is exactly 1.
inline std::vector<float> resample_ratio(const std::vector<float>& in, double ratio) {
  require(!in.empty(), errc::empty_input, "cannot resample an empty signal");
  require(ratio > 0.0, errc::invalid_spec, "resample ratio must be positive");

  if (ratio == 1.0) return in;
  const size_t n_in = in.size();
  const size_t n_out = static_cast<size_t>(
      std::llround(static_cast<double>(n_in) * ratio));
  require(n_out > 0, errc::invalid_spec, "resample output would be empty");

  // cutoff in cycles per input sample, with a guard band below Nyquist
  const double f_cut = 0.5 * 0.95 * std::min(1.0, ratio);
  const double zero_crossings = 16.0;
  const double half_width = zero_crossings / (2.0 * f_cut);
  const long long reach = static_cast<long long>(std::ceil(half_width));

  std::vector<float> out(n_out);
  for (size_t j = 0; j < n_out; ++j) {
    const double center = static_cast<double>(j) / ratio;
    const long long lo = static_cast<long long>(std::floor(center)) - reach;
    const long long hi = static_cast<long long>(std::floor(center)) + reach + 1;
    double acc = 0.0, ksum = 0.0;
    for (long long i = lo; i <= hi; ++i) {
      const double t = static_cast<double>(i) - center;
      if (std::abs(t) > half_width) continue;
      double k;
      if (std::abs(t) < 1e-12) {
        k = 2.0 * f_cut;
      } else {
        const double x = 2.0 * std::numbers::pi * f_cut * t;
        k = 2.0 * f_cut * std::sin(x) / x;
      }
      k *= 0.5 * (1.0 + std::cos(std::numbers::pi * t / half_width));  // Hann taper
      ksum += k;
      if (i >= 0 && i < static_cast<long long>(n_in)) acc += k * in[static_cast<size_t>(i)];
    }
    out[j] = static_cast<float>(ksum != 0.0 ? acc / ksum : 0.0);
  }
  return out;
}

/// Resample to a target rate. Output count is round(n_in * target / in_rate).
inline std::vector<float> resample(const std::vector<float>& in, uint32_t in_rate,
                                   uint32_t target_rate) {
  require(in_rate > 0 && target_rate > 0, errc::invalid_spec, "rates must be positive");
  if (in_rate == target_rate) return in;
  return resample_ratio(in, static_cast<double>(target_rate) / static_cast<double>(in_rate));
}

}  // namespace respkit::audio
