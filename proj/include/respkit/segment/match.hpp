#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "respkit/dataset/meta.hpp"

namespace respkit::segment {

struct PeakMatch {
  size_t peak = 0;        // index into the peak-time list
  size_t annotation = 0;  // index into the annotation list
};

/// Each annotation claims only the peak nearest its midpoint. When several
/// annotations claim the same peak, the smallest midpoint distance wins (tie:
/// earlier annotation); losers stay unmatched rather than spilling over to a
/// farther peak. Result is sorted by annotation index.
inline std::vector<PeakMatch> match_peaks(const std::vector<double>& peak_times,
                                          const std::vector<dataset::CycleAnnotation>& annotations) {
  std::vector<PeakMatch> out;
  if (peak_times.empty() || annotations.empty()) return out;

  const size_t np = peak_times.size();
  // winner[p] = annotation currently holding peak p
  std::vector<size_t> winner(np, static_cast<size_t>(-1));
  std::vector<double> winner_dist(np, std::numeric_limits<double>::infinity());

  for (size_t a = 0; a < annotations.size(); ++a) {
    const double mid = 0.5 * (annotations[a].start_seconds + annotations[a].end_seconds);
    size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t p = 0; p < np; ++p) {
      const double d = std::abs(peak_times[p] - mid);
      if (d < best_dist) {  // equidistant peaks: keep the earlier one
        best_dist = d;
        best = p;
      }
    }
    if (best_dist < winner_dist[best]) {  // ties resolved toward the earlier annotation
      winner[best] = a;
      winner_dist[best] = best_dist;
    }
  }

  for (size_t a = 0; a < annotations.size(); ++a) {
    for (size_t p = 0; p < np; ++p) {
      if (winner[p] == a) {
        out.push_back({p, a});
        break;
      }
    }
  }
  return out;
}

}  // namespace respkit::segment
