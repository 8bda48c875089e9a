#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/core/error.hpp"
#include "respkit/dataset/meta.hpp"
#include "respkit/optim/nelder_mead.hpp"
#include "respkit/segment/envelope.hpp"
#include "respkit/segment/match.hpp"
#include "respkit/segment/peaks.hpp"

namespace respkit::segment {

struct SegmentationParams {
  double sigma_seconds = 0.25;
  double min_distance_seconds = 1.0;
  double min_prominence_fraction = 0.1;
  double relative_height = 0.8;
  bool absolute_height = false;
};

struct OffsetPair {
  double delta_start = 0.0;  // seconds added to every left base
  double delta_end = 0.0;    // seconds added to every right base
};

struct CycleBoundary {
  double start = 0.0;  // seconds
  double end = 0.0;
};

/// One detected peak paired with its hand annotation, both in seconds.
struct MatchedPair {
  double left_base_s = 0.0;
  double right_base_s = 0.0;
  double ann_start_s = 0.0;
  double ann_end_s = 0.0;
};

/// Detect peaks on the clip and pair them with annotations for calibration.
inline std::vector<MatchedPair> collect_matches(const audio::AudioClip& clip,
                                                const std::vector<dataset::CycleAnnotation>& annotations,
                                                const SegmentationParams& params = {}) {
  const Envelope env = gaussian_smooth(energy_envelope(clip), params.sigma_seconds);
  const auto peaks =
      detect_peaks(env, params.min_distance_seconds, params.min_prominence_fraction);

  std::vector<double> peak_times(peaks.size());
  for (size_t i = 0; i < peaks.size(); ++i) {
    peak_times[i] = env.time_of(static_cast<double>(peaks[i].index));
  }

  std::vector<MatchedPair> out;
  for (const PeakMatch& m : match_peaks(peak_times, annotations)) {
    const BasePair bases =
        peak_bases(env, peaks[m.peak], params.relative_height, params.absolute_height);
    MatchedPair pair;
    pair.left_base_s = env.time_of(bases.left);
    pair.right_base_s = env.time_of(bases.right);
    pair.ann_start_s = annotations[m.annotation].start_seconds;
    pair.ann_end_s = annotations[m.annotation].end_seconds;
    out.push_back(pair);
  }
  return out;
}

/// Mean absolute start error plus mean absolute end error after shifting the
/// detected bases by the candidate offsets.
inline double offset_objective(const std::vector<MatchedPair>& pairs, double delta_start,
                               double delta_end) {
  require(!pairs.empty(), errc::no_matches, "offset_objective: no matched pairs");
  double start_err = 0.0;
  double end_err = 0.0;
  for (const MatchedPair& p : pairs) {
    start_err += std::abs(p.left_base_s + delta_start - p.ann_start_s);
    end_err += std::abs(p.right_base_s + delta_end - p.ann_end_s);
  }
  const double n = static_cast<double>(pairs.size());
  return start_err / n + end_err / n;
}

struct CalibrationResult {
  OffsetPair offsets;
  double objective_before = 0.0;  // at (0, 0)
  double objective_after = 0.0;
  size_t n_matches = 0;
};

/// Downhill-simplex fit of the global start/end offsets within a +-2 s box,
/// starting from (0, 0) with 0.25 s steps, stopping at 1 ms simplex diameter
/// or 200 iterations. Starting from the zero offsets guarantees the fit never
/// ends worse than applying no offset at all.
inline CalibrationResult calibrate_offsets(const std::vector<MatchedPair>& pairs) {
  require(!pairs.empty(), errc::no_matches, "calibrate_offsets: no matched pairs");

  optim::NelderMeadOptions opts;
  opts.initial_step = 0.25;
  opts.diameter_tolerance = 1e-3;
  opts.max_iterations = 200;
  opts.lower = {-2.0, -2.0};
  opts.upper = {2.0, 2.0};

  const auto result = optim::nelder_mead(
      [&pairs](const std::vector<double>& x) { return offset_objective(pairs, x[0], x[1]); },
      {0.0, 0.0}, opts);

  CalibrationResult out;
  out.offsets.delta_start = result.x[0];
  out.offsets.delta_end = result.x[1];
  out.objective_before = offset_objective(pairs, 0.0, 0.0);
  out.objective_after = result.value;
  out.n_matches = pairs.size();
  return out;
}

/// Full boundary pipeline: envelope, smoothing, peaks, bases, offsets, clamp.
/// Degenerate boundaries (start >= end after clamping) are dropped.
inline std::vector<CycleBoundary> segment_cycles(const audio::AudioClip& clip,
                                                 const OffsetPair& offsets,
                                                 const SegmentationParams& params = {}) {
  const Envelope env = gaussian_smooth(energy_envelope(clip), params.sigma_seconds);
  const auto peaks =
      detect_peaks(env, params.min_distance_seconds, params.min_prominence_fraction);
  const double duration =
      static_cast<double>(clip.samples.size()) / static_cast<double>(clip.sample_rate);

  std::vector<CycleBoundary> out;
  for (const Peak& p : peaks) {
    const BasePair bases = peak_bases(env, p, params.relative_height, params.absolute_height);
    CycleBoundary b;
    b.start = std::clamp(env.time_of(bases.left) + offsets.delta_start, 0.0, duration);
    b.end = std::clamp(env.time_of(bases.right) + offsets.delta_end, 0.0, duration);
    if (b.start < b.end) out.push_back(b);
  }
  std::sort(out.begin(), out.end(),
            [](const CycleBoundary& a, const CycleBoundary& b) {
              return a.start < b.start || (a.start == b.start && a.end < b.end);
            });
  return out;
}

}  // namespace respkit::segment
