// SPDX-License-Identifier: Apache-2.0

#include "defly/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace defly {

namespace {

// Min/max of valid depths in the ws x ws window around (u, v), center
// included. Returns false when no valid depth exists.
bool window_min_max(const DepthImage& depth, int u, int v, int r, float* lo,
                    float* hi) {
  *lo = std::numeric_limits<float>::max();
  *hi = std::numeric_limits<float>::lowest();
  bool any = false;
  for (int m = v - r; m <= v + r; ++m) {
    for (int n = u - r; n <= u + r; ++n) {
      if (!depth.in_bounds(n, m)) continue;
      const float d = depth.at(n, m);
      if (!DepthImage::is_valid_depth(d)) continue;
      *lo = std::min(*lo, d);
      *hi = std::max(*hi, d);
      any = true;
    }
  }
  return any;
}

}  // namespace

std::pair<DepthImage, InjectionRecord> inject_flying_pixels(
    const DepthImage& depth_gt, const std::vector<uint8_t>& edges,
    double fraction, int ws, uint64_t seed) {
  if (ws < 3 || ws % 2 == 0) {
    throw ValidationError("inject: window size must be odd and >= 3");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("inject: fraction must lie in (0, 1]");
  }
  const size_t n = static_cast<size_t>(depth_gt.width()) * depth_gt.height();
  if (edges.size() != n) {
    throw ValidationError("inject: edge mask size does not match depth");
  }

  std::vector<int> edge_indices;
  int valid_edges = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!edges[i]) continue;
    edge_indices.push_back(static_cast<int>(i));
    if (DepthImage::is_valid_depth(depth_gt.values()[i])) ++valid_edges;
  }
  if (edge_indices.empty() || valid_edges == 0) {
    throw ValidationError("inject: no valid edge pixels");
  }

  const int target = static_cast<int>(std::min<double>(
      std::ceil(fraction * static_cast<double>(edge_indices.size())),
      static_cast<double>(edge_indices.size())));

  SeededRng rng(seed);
  rng.shuffle(edge_indices);

  std::vector<float> corrupted(depth_gt.values().begin(),
                               depth_gt.values().end());
  InjectionRecord record;
  record.width = depth_gt.width();
  record.height = depth_gt.height();
  record.fp_mask.assign(n, 0);
  record.fraction = fraction;
  record.ws = ws;
  record.seed = seed;
  record.rng_algorithm = SeededRng::kAlgorithm;

  const int r = ws / 2;
  for (int idx : edge_indices) {
    if (record.count() >= target) break;
    const int u = idx % depth_gt.width();
    const int v = idx / depth_gt.width();
    const float original = depth_gt.at(u, v);
    if (!DepthImage::is_valid_depth(original)) continue;  // skip, resample
    float lo, hi;
    if (!window_min_max(depth_gt, u, v, r, &lo, &hi)) continue;
    if (lo == hi) continue;  // needs two distinct depths to float between
    const float injected = static_cast<float>(rng.uniform(lo, hi));
    corrupted[idx] = injected;
    record.fp_mask[idx] = 1;
    record.entries.push_back(
        InjectionRecord::Entry{idx, original, injected, lo, hi});
  }
  std::sort(record.entries.begin(), record.entries.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });

  return {DepthImage(depth_gt.width(), depth_gt.height(), std::move(corrupted),
                     depth_gt.unit()),
          std::move(record)};
}

TwoPlaneScene make_two_plane_scene(double near_depth, double far_depth,
                                   std::array<float, 3> near_color,
                                   std::array<float, 3> far_color, int width,
                                   int height, const Intrinsics& intr,
                                   double noise_sd, uint64_t seed, int scale) {
  if (!(near_depth > 0.0 && near_depth < far_depth)) {
    throw ValidationError("two-plane scene: need 0 < near < far");
  }
  if (width < 8 || height < 8) {
    throw ValidationError("two-plane scene: dims must be at least 8x8");
  }
  if (width != intr.width() || height != intr.height()) {
    throw ValidationError("two-plane scene: dims do not match intrinsics");
  }
  if (!(noise_sd >= 0.0) || scale < 1) {
    throw ValidationError("two-plane scene: bad noise or scale");
  }

  SeededRng rng(seed);
  const int split = width / 2;  // columns [0, split) near, [split, width) far
  std::vector<float> depth(static_cast<size_t>(width) * height);
  std::vector<uint8_t> near_mask(depth.size(), 0), far_mask(depth.size(), 0);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const size_t i = static_cast<size_t>(v) * width + u;
      const bool near = u < split;
      double d = near ? near_depth : far_depth;
      if (noise_sd > 0.0) d += noise_sd * rng.gaussian();
      depth[i] = static_cast<float>(d);
      (near ? near_mask : far_mask)[i] = 1;
    }
  }

  const int cw = width * scale;
  const int ch = height * scale;
  std::vector<float> rgb(static_cast<size_t>(cw) * ch * 3);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const auto& c = (x / scale < split) ? near_color : far_color;
      float* px = rgb.data() + 3 * (static_cast<size_t>(y) * cw + x);
      px[0] = c[0];
      px[1] = c[1];
      px[2] = c[2];
    }
  }

  return TwoPlaneScene{DepthImage(width, height, std::move(depth)),
                       ColorImage(cw, ch, std::move(rgb)),
                       std::move(near_mask), std::move(far_mask)};
}

}  // namespace defly
