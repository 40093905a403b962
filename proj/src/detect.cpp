// SPDX-License-Identifier: Apache-2.0

#include "defly/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "defly/parallel.hpp"

namespace defly {

namespace {

void check_window(int ws) {
  if (ws < 3 || ws % 2 == 0) {
    throw ValidationError("sad: window size must be odd and >= 3");
  }
}

}  // namespace

double sad_score(const DepthImage& depth, int u, int v, int ws) {
  check_window(ws);
  if (!depth.in_bounds(u, v)) {
    throw ValidationError("sad: pixel outside the grid");
  }
  if (!depth.valid_at(u, v)) {
    throw ValidationError("sad: center pixel has no valid depth");
  }
  const int r = ws / 2;
  const double center = depth.at(u, v);
  double sum = 0.0;
  for (int m = v - r; m <= v + r; ++m) {
    for (int n = u - r; n <= u + r; ++n) {
      if (!depth.in_bounds(n, m)) continue;
      const float d = depth.at(n, m);
      if (!DepthImage::is_valid_depth(d)) continue;
      sum += std::abs(center - static_cast<double>(d));
    }
  }
  return sum;
}

std::vector<float> sad_map(const DepthImage& depth, int ws) {
  check_window(ws);
  const int w = depth.width();
  const int h = depth.height();
  std::vector<float> scores(static_cast<size_t>(w) * h,
                            std::numeric_limits<float>::quiet_NaN());
  par::parallel_for(h, [&](int v) {
    for (int u = 0; u < w; ++u) {
      if (!depth.valid_at(u, v)) continue;
      scores[static_cast<size_t>(v) * w + u] =
          static_cast<float>(sad_score(depth, u, v, ws));
    }
  });
  return scores;
}

CandidateSet threshold_top_percent(std::vector<float> scores, int width,
                                   int height, double tau_percent) {
  if (!(tau_percent > 0.0 && tau_percent < 100.0)) {
    throw ValidationError("threshold: tau must lie in (0, 100)");
  }
  if (scores.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("threshold: score map size does not match grid");
  }

  std::vector<int> order;
  order.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isnan(scores[i])) order.push_back(static_cast<int>(i));
  }
  if (order.empty()) {
    throw ValidationError("threshold: no valid pixels to rank");
  }

  const int n_valid = static_cast<int>(order.size());
  const int k = static_cast<int>(
      std::min<double>(std::ceil(tau_percent * n_valid / 100.0), n_valid));

  // Rank by score descending; equal scores by ascending row-major index.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<uint8_t> mask(scores.size(), 0);
  std::vector<int> flagged(order.begin(), order.begin() + k);
  for (int idx : flagged) mask[idx] = 1;
  std::sort(flagged.begin(), flagged.end());

  return CandidateSet(width, height, std::move(scores), std::move(mask),
                      std::move(flagged));
}

CandidateSet detect_candidates(const DepthImage& depth, int ws,
                               double tau_percent) {
  return threshold_top_percent(sad_map(depth, ws), depth.width(),
                               depth.height(), tau_percent);
}

}  // namespace defly
