#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit::optim {

struct NelderMeadOptions {
  double initial_step = 0.25;
  double diameter_tolerance = 1e-3;
  int max_iterations = 200;
  // Componentwise box; trial points are clamped into it before evaluation.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

namespace detail {

inline void clamp_into_box(std::vector<double>& x, const NelderMeadOptions& opts) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (i < opts.lower.size()) x[i] = std::max(x[i], opts.lower[i]);
    if (i < opts.upper.size()) x[i] = std::min(x[i], opts.upper[i]);
  }
}

inline double simplex_diameter(const std::vector<std::vector<double>>& verts) {
  double d = 0.0;
  for (size_t a = 0; a < verts.size(); ++a) {
    for (size_t b = a + 1; b < verts.size(); ++b) {
      double s = 0.0;
      for (size_t i = 0; i < verts[a].size(); ++i) {
        const double diff = verts[a][i] - verts[b][i];
        s += diff * diff;
      }
      d = std::max(d, std::sqrt(s));
    }
  }
  return d;
}

}  // namespace detail

/// Downhill simplex with the standard coefficients (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). The initial simplex is x0 plus one vertex per
/// coordinate offset by initial_step. Stops once the simplex diameter falls
/// below diameter_tolerance or after max_iterations. Because x0 stays in the
/// simplex until replaced by something better, the result never evaluates
/// worse than x0.
template <typename F>
NelderMeadResult nelder_mead(F&& objective, std::vector<double> x0,
                             const NelderMeadOptions& opts = {}) {
  const size_t n = x0.size();
  require(n > 0, errc::empty_input, "nelder_mead: empty start point");

  detail::clamp_into_box(x0, opts);

  std::vector<std::vector<double>> verts;
  verts.push_back(x0);
  for (size_t i = 0; i < n; ++i) {
    auto v = x0;
    v[i] += opts.initial_step;
    detail::clamp_into_box(v, opts);
    if (v[i] == x0[i]) v[i] = x0[i] - opts.initial_step;  // step hit the box edge
    detail::clamp_into_box(v, opts);
    verts.push_back(v);
  }

  std::vector<double> vals(verts.size());
  for (size_t i = 0; i < verts.size(); ++i) vals[i] = objective(verts[i]);

  auto order = [&] {
    std::vector<size_t> idx(verts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> nv(verts.size());
    std::vector<double> nf(verts.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      nv[i] = std::move(verts[idx[i]]);
      nf[i] = vals[idx[i]];
    }
    verts = std::move(nv);
    vals = std::move(nf);
  };

  auto evaluate = [&](std::vector<double> p) {
    detail::clamp_into_box(p, opts);
    double f = objective(p);
    return std::pair<std::vector<double>, double>(std::move(p), f);
  };

  int iter = 0;
  order();
  while (iter < opts.max_iterations &&
         detail::simplex_diameter(verts) >= opts.diameter_tolerance) {
    ++iter;
    const size_t worst = verts.size() - 1;

    std::vector<double> centroid(n, 0.0);
    for (size_t v = 0; v < worst; ++v) {
      for (size_t i = 0; i < n; ++i) centroid[i] += verts[v][i];
    }
    for (double& c : centroid) c /= static_cast<double>(worst);

    std::vector<double> refl(n);
    for (size_t i = 0; i < n; ++i) refl[i] = centroid[i] + (centroid[i] - verts[worst][i]);
    auto [xr, fr] = evaluate(std::move(refl));

    if (fr < vals[0]) {
      std::vector<double> exp_pt(n);
      for (size_t i = 0; i < n; ++i) exp_pt[i] = centroid[i] + 2.0 * (xr[i] - centroid[i]);
      auto [xe, fe] = evaluate(std::move(exp_pt));
      if (fe < fr) {
        verts[worst] = std::move(xe);
        vals[worst] = fe;
      } else {
        verts[worst] = std::move(xr);
        vals[worst] = fr;
      }
    } else if (fr < vals[worst - 1]) {
      verts[worst] = std::move(xr);
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      std::vector<double> con(n);
      const std::vector<double>& toward = outside ? xr : verts[worst];
      for (size_t i = 0; i < n; ++i) con[i] = centroid[i] + 0.5 * (toward[i] - centroid[i]);
      auto [xc, fc] = evaluate(std::move(con));
      if (fc <= (outside ? fr : vals[worst])) {
        verts[worst] = std::move(xc);
        vals[worst] = fc;
      } else {
        for (size_t v = 1; v < verts.size(); ++v) {
          for (size_t i = 0; i < n; ++i) {
            verts[v][i] = verts[0][i] + 0.5 * (verts[v][i] - verts[0][i]);
          }
          detail::clamp_into_box(verts[v], opts);
          vals[v] = objective(verts[v]);
        }
      }
    }
    order();
  }

  NelderMeadResult out;
  out.x = verts[0];
  out.value = vals[0];
  out.iterations = iter;
  return out;
}

}  // namespace respkit::optim
