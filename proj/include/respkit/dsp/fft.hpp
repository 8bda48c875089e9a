#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit::dsp {

inline bool is_power_of_two(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  require(is_power_of_two(n), errc::invalid_spec, "fft size must be a power of two");
  if (n == 1) return;

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

/// Magnitudes of the one-sided spectrum (bins 0..n/2) of a real frame.
/// The frame is zero-padded to n_fft if shorter.
inline void real_fft_magnitudes(const double* frame, size_t frame_len, size_t n_fft,
                                std::vector<std::complex<double>>& work,
                                double* out_magnitudes) {
  work.assign(n_fft, std::complex<double>(0.0, 0.0));
  for (size_t i = 0; i < frame_len && i < n_fft; ++i) work[i] = frame[i];
  fft_inplace(work);
  for (size_t k = 0; k <= n_fft / 2; ++k) out_magnitudes[k] = std::abs(work[k]);
}

}  // namespace respkit::dsp
