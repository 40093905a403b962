// SPDX-License-Identifier: Apache-2.0

#include "defly/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "defly/correct.hpp"
#include "defly/parallel.hpp"

namespace defly {

namespace {

void check_window(int ws) {
  if (ws < 3 || ws % 2 == 0) {
    throw ValidationError("baseline: window size must be odd and >= 3");
  }
}

// Lloyd iterations on 1D depths, centers seeded at min and max. Ties in the
// assignment go to the lower cluster. Both clusters stay non-empty because
// the min and max always stick to their own seeds.
std::pair<double, double> two_means(const std::vector<float>& depths) {
  double lo = *std::min_element(depths.begin(), depths.end());
  double hi = *std::max_element(depths.begin(), depths.end());
  for (int iter = 0; iter < 100; ++iter) {
    double sum_lo = 0.0, sum_hi = 0.0;
    int n_lo = 0, n_hi = 0;
    for (float d : depths) {
      if (std::abs(d - lo) <= std::abs(d - hi)) {
        sum_lo += d;
        ++n_lo;
      } else {
        sum_hi += d;
        ++n_hi;
      }
    }
    const double new_lo = sum_lo / n_lo;
    const double new_hi = sum_hi / n_hi;
    if (new_lo == lo && new_hi == hi) break;
    lo = new_lo;
    hi = new_hi;
  }
  return {lo, hi};
}

}  // namespace

DepthImage neighbor_distance_correct(const DepthImage& depth,
                                     const CandidateSet& candidates, int ws) {
  check_window(ws);
  const int w = depth.width();
  const int h = depth.height();
  const int r = ws / 2;
  const std::vector<int>& flagged = candidates.flagged();

  std::vector<float> corrected(flagged.size());
  par::parallel_for(static_cast<int>(flagged.size()), [&](int i) {
    const int idx = flagged[i];
    const int u = idx % w;
    const int v = idx / w;
    corrected[i] = depth.at(u, v);  // default: unchanged

    std::vector<float> window_depths;
    for (int m = v - r; m <= v + r; ++m) {
      for (int n = u - r; n <= u + r; ++n) {
        if (!depth.in_bounds(n, m)) continue;
        if (candidates.is_candidate(n, m)) continue;
        const float d = depth.at(n, m);
        if (!DepthImage::is_valid_depth(d)) continue;
        window_depths.push_back(d);
      }
    }
    if (window_depths.empty()) return;

    const auto [lo, hi] = std::minmax_element(window_depths.begin(),
                                              window_depths.end());
    if (*lo == *hi) {
      corrected[i] = *lo;
      return;
    }
    const auto [mean_lo, mean_hi] = two_means(window_depths);
    const double d = depth.at(u, v);
    corrected[i] = static_cast<float>(
        std::abs(d - mean_lo) <= std::abs(d - mean_hi) ? mean_lo : mean_hi);
  });

  std::vector<float> out(depth.values().begin(), depth.values().end());
  for (size_t i = 0; i < flagged.size(); ++i) out[flagged[i]] = corrected[i];
  return DepthImage(w, h, std::move(out), depth.unit());
}

DepthImage joint_bilateral_correct(const DepthImage& depth,
                                   const ColorImage& rgb, int scale,
                                   const CandidateSet& candidates, int ws,
                                   double sigma_spatial, double sigma_color) {
  check_window(ws);
  if (!(sigma_spatial > 0.0)) {
    throw ValidationError("bilateral: sigma_s must be > 0");
  }
  const int w = depth.width();
  const int h = depth.height();
  const int r = ws / 2;
  const double radius = r;  // offsets normalized to [-1, 1]
  const std::vector<int>& flagged = candidates.flagged();

  std::vector<float> corrected(flagged.size());
  par::parallel_for(static_cast<int>(flagged.size()), [&](int i) {
    const int idx = flagged[i];
    const int u = idx % w;
    const int v = idx / w;
    corrected[i] = depth.at(u, v);

    double num = 0.0;
    double den = 0.0;
    for (int m = v - r; m <= v + r; ++m) {
      for (int n = u - r; n <= u + r; ++n) {
        if (!depth.in_bounds(n, m)) continue;
        if (candidates.is_candidate(n, m)) continue;
        const float d = depth.at(n, m);
        if (!DepthImage::is_valid_depth(d)) continue;
        const double du = (n - u) / radius;
        const double dv = (m - v) / radius;
        const double w_s =
            std::exp(-(du * du + dv * dv) / (2.0 * sigma_spatial * sigma_spatial));
        const double w_c = patch_weight(rgb, scale, u, v, n, m, sigma_color);
        num += w_s * w_c * d;
        den += w_s * w_c;
      }
    }
    if (den < 1e-300) return;
    corrected[i] = static_cast<float>(num / den);
  });

  std::vector<float> out(depth.values().begin(), depth.values().end());
  for (size_t i = 0; i < flagged.size(); ++i) out[flagged[i]] = corrected[i];
  return DepthImage(w, h, std::move(out), depth.unit());
}

}  // namespace defly
