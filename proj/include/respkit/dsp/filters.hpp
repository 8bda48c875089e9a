#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/core/error.hpp"
#include "respkit/core/tensor.hpp"

namespace respkit::dsp {

/// One second-order section, direct form: b0 + b1 z^-1 + b2 z^-2 over
/// 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

namespace detail {

// Poles of the unit-cutoff analog Butterworth prototype in the upper half
// plane. For even order these are order/2 strict-conjugate representatives.
inline std::vector<std::complex<double>> butter_prototype_upper(int order) {
  std::vector<std::complex<double>> poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order);
    std::complex<double> p(std::cos(theta), std::sin(theta));
    if (p.imag() > 1e-12) poles.push_back(p);
  }
  return poles;
}

inline std::complex<double> bilinear_pole(std::complex<double> s, double c) {
  return (c + s) / (c - s);
}

}  // namespace detail

/// Butterworth bandpass as cascaded biquads. `order` is the lowpass prototype
/// order; the digital filter has 2*order poles, i.e. `order` sections. Gain is
/// unity at the geometric center frequency and carried by the first section.
inline std::vector<Biquad> butterworth_bandpass_sos(double low_hz, double high_hz,
                                                    double sample_rate, int order = 4) {
  require(order >= 2 && order % 2 == 0, errc::invalid_spec,
          "bandpass prototype order must be even and >= 2");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0,
          errc::invalid_band, "cutoffs must satisfy 0 < low < high < nyquist");

  const double c = 2.0 * sample_rate;  // bilinear constant
  const double w1 = c * std::tan(std::numbers::pi * low_hz / sample_rate);
  const double w2 = c * std::tan(std::numbers::pi * high_hz / sample_rate);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  // Lowpass-to-bandpass: each prototype pole p yields a conjugate-closed
  // quadruple; keeping the two upper-half roots keeps one representative of
  // each conjugate pair.
  std::vector<std::complex<double>> upper;
  for (const auto& p : detail::butter_prototype_upper(order)) {
    const std::complex<double> half = 0.5 * bw * p;
    const std::complex<double> root = std::sqrt(half * half - w0 * w0);
    upper.push_back(half + root);
    upper.push_back(half - root);
  }

  std::vector<Biquad> sos;
  sos.reserve(upper.size());
  for (const auto& s : upper) {
    const std::complex<double> z = detail::bilinear_pole(s, c);
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // one zero at z = 1, one at z = -1 per section
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    sos.push_back(q);
  }

  // normalize |H| = 1 at the warped center frequency
  const double theta_c = 2.0 * std::atan(w0 / c);
  const std::complex<double> zc(std::cos(theta_c), std::sin(theta_c));
  const std::complex<double> zc1 = 1.0 / zc, zc2 = 1.0 / (zc * zc);
  std::complex<double> h(1.0, 0.0);
  for (const auto& q : sos)
    h *= (q.b0 + q.b1 * zc1 + q.b2 * zc2) / (1.0 + q.a1 * zc1 + q.a2 * zc2);
  const double gain = 1.0 / std::abs(h);
  sos.front().b0 *= gain;
  sos.front().b1 *= gain;
  sos.front().b2 *= gain;
  return sos;
}

namespace detail {

// Steady-state transposed direct form II state for a unit step input, per
// section. Scaling these by the first input sample removes the startup
// transient of the forward pass.
struct SectionState {
  double s1 = 0.0, s2 = 0.0;
};

inline SectionState step_steady_state(const Biquad& q) {
  const double denom = 1.0 + q.a1 + q.a2;
  const double k_dc = denom != 0.0 ? (q.b0 + q.b1 + q.b2) / denom : 0.0;
  SectionState st;
  st.s2 = q.b2 - q.a2 * k_dc;
  st.s1 = q.b1 - q.a1 * k_dc + st.s2;
  return st;
}

inline void sosfilt_inplace(const std::vector<Biquad>& sos, std::vector<double>& x,
                            double scale_first) {
  // cascade DC gains determine each section's steady-state input level
  double level = scale_first;
  std::vector<SectionState> state(sos.size());
  for (size_t i = 0; i < sos.size(); ++i) {
    const SectionState ss = step_steady_state(sos[i]);
    state[i].s1 = ss.s1 * level;
    state[i].s2 = ss.s2 * level;
    const double denom = 1.0 + sos[i].a1 + sos[i].a2;
    level *= denom != 0.0 ? (sos[i].b0 + sos[i].b1 + sos[i].b2) / denom : 0.0;
  }
  for (size_t i = 0; i < sos.size(); ++i) {
    const Biquad& q = sos[i];
    SectionState& st = state[i];
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + st.s1;
      st.s1 = q.b1 * in - q.a1 * out + st.s2;
      st.s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

}  // namespace detail

/// Forward-backward (zero phase) cascade filtering with odd edge extension
/// and steady-state initial conditions. Output length equals input length.
inline std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos,
                                       const std::vector<double>& x) {
  require(!x.empty(), errc::empty_input, "cannot filter an empty signal");
  const size_t n = x.size();
  const size_t padlen = std::min<size_t>(n - 1, 200);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[0] - x[padlen - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  detail::sosfilt_inplace(sos, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  detail::sosfilt_inplace(sos, ext, ext.front());
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<ptrdiff_t>(padlen),
                             ext.begin() + static_cast<ptrdiff_t>(padlen + n));
}

/// Zero-phase Butterworth bandpass on a clip. Length and sample rate are
/// preserved.
inline audio::AudioClip bandpass_filter(const audio::AudioClip& clip, double low_hz = 100.0,
                                        double high_hz = 2000.0, int order = 4) {
  require(!clip.samples.empty(), errc::empty_clip, "cannot filter an empty clip");
  const auto sos =
      butterworth_bandpass_sos(low_hz, high_hz, static_cast<double>(clip.sample_rate), order);
  std::vector<double> x(clip.samples.begin(), clip.samples.end());
  x = sosfiltfilt(sos, x);
  audio::AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) out.samples[i] = static_cast<float>(x[i]);
  return out;
}

/// Elementwise log(1 + x) on a nonnegative matrix.
inline Tensor<double> log_compress(const Tensor<double>& values) {
  Tensor<double> out = values;
  for (double& v : out.storage()) {
    require(v >= 0.0, errc::negative_input, "log_compress requires nonnegative entries");
    v = std::log1p(v);
  }
  return out;
}

}  // namespace respkit::dsp
