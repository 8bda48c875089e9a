#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/segment/envelope.hpp"

namespace respkit::segment {

struct Peak {
  size_t index = 0;       // frame of the maximum (plateau midpoint)
  double height = 0.0;
  double prominence = 0.0;
  // Prominence bases: positions of the lowest points between the peak and the
  // nearest higher ground (or the signal edge) on each side. Integral values.
  double left_base = 0.0;
  double right_base = 0.0;
};

/// Fractional-frame crossings of the envelope with an evaluation height.
struct BasePair {
  double left = 0.0;
  double right = 0.0;
};

namespace detail {

// Strict local maxima; runs of equal samples count once, at the midpoint.
inline std::vector<size_t> local_maxima(const std::vector<double>& x) {
  std::vector<size_t> out;
  const size_t n = x.size();
  size_t i = 1;
  while (n >= 3 && i < n - 1) {
    if (x[i - 1] < x[i]) {
      size_t ahead = i + 1;
      while (ahead < n - 1 && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        out.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return out;
}

// Lowest point between the peak and the nearest strictly higher sample on one
// side (or the edge). Height above the larger of the two valley floors is the
// peak's prominence.
inline void prominence_of(const std::vector<double>& x, Peak& p) {
  const long long n = static_cast<long long>(x.size());
  const long long peak = static_cast<long long>(p.index);

  long long left_pos = peak;
  double left_min = x[p.index];
  for (long long i = peak; i >= 0 && x[static_cast<size_t>(i)] <= x[p.index]; --i) {
    if (x[static_cast<size_t>(i)] < left_min) {
      left_min = x[static_cast<size_t>(i)];
      left_pos = i;
    }
  }

  long long right_pos = peak;
  double right_min = x[p.index];
  for (long long i = peak; i < n && x[static_cast<size_t>(i)] <= x[p.index]; ++i) {
    if (x[static_cast<size_t>(i)] < right_min) {
      right_min = x[static_cast<size_t>(i)];
      right_pos = i;
    }
  }

  p.prominence = x[p.index] - std::max(left_min, right_min);
  p.left_base = static_cast<double>(left_pos);
  p.right_base = static_cast<double>(right_pos);
}

// Keep-higher greedy: walk candidates from the highest down, discarding any
// not-yet-kept neighbor closer than min_distance. Equal heights keep the
// later peak.
inline void enforce_distance(std::vector<Peak>& peaks, double min_distance_frames) {
  const size_t n = peaks.size();
  std::vector<size_t> priority(n);
  std::iota(priority.begin(), priority.end(), size_t{0});
  std::stable_sort(priority.begin(), priority.end(), [&](size_t a, size_t b) {
    return peaks[a].height < peaks[b].height;
  });
  std::vector<char> keep(n, 1);
  for (size_t r = n; r-- > 0;) {
    const size_t j = priority[r];
    if (!keep[j]) continue;
    for (size_t k = j; k-- > 0;) {
      if (static_cast<double>(peaks[j].index - peaks[k].index) >= min_distance_frames) break;
      keep[k] = 0;
    }
    for (size_t k = j + 1; k < n; ++k) {
      if (static_cast<double>(peaks[k].index - peaks[j].index) >= min_distance_frames) break;
      keep[k] = 0;
    }
  }
  std::vector<Peak> filtered;
  for (size_t i = 0; i < n; ++i) {
    if (keep[i]) filtered.push_back(peaks[i]);
  }
  peaks = std::move(filtered);
}

}  // namespace detail

/// Local maxima whose prominence reaches min_prominence_fraction of the
/// envelope maximum, thinned so survivors sit at least min_distance apart.
inline std::vector<Peak> detect_peaks(const Envelope& env,
                                      double min_distance_seconds = 1.0,
                                      double min_prominence_fraction = 0.1) {
  require(env.frame_hop_seconds > 0.0, errc::invalid_spec,
          "detect_peaks: envelope has no frame hop");
  std::vector<Peak> peaks;
  if (env.values.empty()) return peaks;

  const double global_max = *std::max_element(env.values.begin(), env.values.end());
  const double threshold = min_prominence_fraction * global_max;

  for (size_t idx : detail::local_maxima(env.values)) {
    Peak p;
    p.index = idx;
    p.height = env.values[idx];
    detail::prominence_of(env.values, p);
    if (p.prominence >= threshold) peaks.push_back(p);
  }

  detail::enforce_distance(peaks, min_distance_seconds / env.frame_hop_seconds);
  return peaks;
}

/// Crossings of the envelope with h = height - relative_height * prominence
/// (or h = (1 - relative_height) * height in absolute mode), linearly
/// interpolated and confined to the peak's prominence bases.
inline BasePair peak_bases(const Envelope& env, const Peak& peak,
                           double relative_height = 0.8, bool absolute_height = false) {
  require(relative_height >= 0.0, errc::invalid_spec,
          "peak_bases: relative height must be nonnegative");
  const std::vector<double>& x = env.values;
  const double h = absolute_height ? (1.0 - relative_height) * peak.height
                                   : peak.height - relative_height * peak.prominence;

  const size_t i_min = static_cast<size_t>(peak.left_base);
  const size_t i_max = static_cast<size_t>(peak.right_base);

  size_t i = peak.index;
  while (i > i_min && h < x[i]) --i;
  double left = static_cast<double>(i);
  if (x[i] < h) left += (h - x[i]) / (x[i + 1] - x[i]);

  i = peak.index;
  while (i < i_max && h < x[i]) ++i;
  double right = static_cast<double>(i);
  if (x[i] < h) right -= (h - x[i]) / (x[i - 1] - x[i]);

  return {left, right};
}

}  // namespace respkit::segment
