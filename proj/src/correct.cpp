// SPDX-License-Identifier: Apache-2.0

#include "defly/correct.hpp"

#include <algorithm>
#include <cmath>

#include "defly/detect.hpp"
#include "defly/parallel.hpp"

namespace defly {

namespace {
constexpr double kMinTotalWeight = 1e-300;
}

double color_distance(const ColorImage& rgb, int scale, int ua, int va,
                      int ub, int vb) {
  const int s = scale;
  double sum = 0.0;
  for (int dy = 0; dy < s; ++dy) {
    const float* row_a = rgb.pixel(ua * s, va * s + dy);
    const float* row_b = rgb.pixel(ub * s, vb * s + dy);
    for (int k = 0; k < 3 * s; ++k) {
      const double diff = static_cast<double>(row_a[k]) - row_b[k];
      sum += diff * diff;
    }
  }
  return sum / (static_cast<double>(s) * s);
}

double color_distance(std::span<const std::array<float, 3>> a,
                      std::span<const std::array<float, 3>> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ValidationError("color distance: patch shapes differ");
  }
  double sum = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    for (int c = 0; c < 3; ++c) {
      const double diff = static_cast<double>(a[k][c]) - b[k][c];
      sum += diff * diff;
    }
  }
  return sum / static_cast<double>(a.size());
}

double color_weight(double color_dist, double sigma_color) {
  if (!(sigma_color > 0.0)) {
    throw ValidationError("weight: sigma_c must be > 0");
  }
  return std::exp(-color_dist / (2.0 * sigma_color * sigma_color));
}

double patch_weight(const ColorImage& rgb, int scale, int ua, int va, int ub,
                    int vb, double sigma_color) {
  return color_weight(color_distance(rgb, scale, ua, va, ub, vb), sigma_color);
}

NeighborSet fov_neighbors(const OrganizedCloud& cloud, const ColorImage& rgb,
                          int scale, int center_u, int center_v,
                          const AngularWindow& window,
                          const CandidateSet& candidates,
                          double sigma_color) {
  if (!cloud.valid(center_u, center_v)) {
    throw ValidationError("fov neighbors: center pixel is invalid");
  }
  NeighborSet set;
  set.center_index = cloud.index(center_u, center_v);

  const AngularCoords center{cloud.column_azimuth_deg(center_u),
                             cloud.row_elevation_deg(center_v)};

  // Column azimuths and row elevations are monotone, so the angular window
  // covers a contiguous pixel rectangle; the per-pixel cone test below is
  // still the membership definition.
  const auto az = cloud.column_azimuths();
  const auto el = cloud.row_elevations();
  const int u_lo = static_cast<int>(
      std::lower_bound(az.begin(), az.end(),
                       center.azimuth_deg - window.half_az_deg) -
      az.begin());
  const int u_hi = static_cast<int>(
      std::upper_bound(az.begin(), az.end(),
                       center.azimuth_deg + window.half_az_deg) -
      az.begin()) - 1;
  const int v_lo = static_cast<int>(
      std::lower_bound(el.begin(), el.end(),
                       center.elevation_deg - window.half_el_deg) -
      el.begin());
  const int v_hi = static_cast<int>(
      std::upper_bound(el.begin(), el.end(),
                       center.elevation_deg + window.half_el_deg) -
      el.begin()) - 1;

  for (int v = v_lo; v <= v_hi; ++v) {
    for (int u = u_lo; u <= u_hi; ++u) {
      if (u == center_u && v == center_v) continue;
      const OrganizedCloud::Point& pt = cloud.at(u, v);
      if (!pt.valid) continue;
      if (candidates.is_candidate(u, v)) continue;
      const AngularCoords coords{cloud.column_azimuth_deg(u),
                                 cloud.row_elevation_deg(v)};
      if (!in_fov_cone(center, coords, window)) continue;
      const double dist =
          color_distance(rgb, scale, center_u, center_v, u, v);
      const double w = color_weight(dist, sigma_color);
      if (w <= 0.0) continue;  // underflow carries no information
      set.members.push_back(Neighbor{cloud.index(u, v), pt.position, dist, w});
    }
  }
  return set;
}

std::optional<double> solve_t(const Vec3& p, const Vec3& ray,
                              const NeighborSet& neighbors) {
  if (neighbors.empty()) return std::nullopt;
  double weight_sum = 0.0;
  double projection_sum = 0.0;
  for (const Neighbor& nb : neighbors.members) {
    weight_sum += nb.weight;
    projection_sum += nb.weight * ray.dot(p - nb.position);
  }
  if (weight_sum < kMinTotalWeight) return std::nullopt;
  return -projection_sum / weight_sum;
}

std::optional<double> corrected_depth(const Vec3& p, const Vec3& ray,
                                      double t_star) {
  const double z = (p + t_star * ray).z();
  if (!(std::isfinite(z) && z > 0.0)) return std::nullopt;
  return z;
}

DepthImage apply_corrections(const DepthImage& depth, const ColorImage& rgb,
                             const Intrinsics& intr,
                             const OrganizedCloud& cloud,
                             const CandidateSet& candidates,
                             const CorrectionConfig& config,
                             std::span<const int> order,
                             IterationReport* report) {
  const int scale = validate_pair(depth, rgb, intr);
  const AngularWindow window =
      AngularWindow::from_intrinsics(intr, config.epsilon());

  struct Result {
    bool corrected = false;
    double t_star = 0.0;
    double depth_after = 0.0;
  };
  std::vector<Result> results(order.size());

  const int n = static_cast<int>(order.size());
  par::parallel_for(n, [&](int i) {
    const int idx = order[i];
    const auto [u, v] = cloud.pixel_of(idx);
    const OrganizedCloud::Point& pt = cloud.at(u, v);
    if (!pt.valid) return;
    const NeighborSet neighbors = fov_neighbors(
        cloud, rgb, scale, u, v, window, candidates, config.sigma_color());
    const std::optional<double> t = solve_t(pt.position, pt.ray, neighbors);
    if (!t) return;
    const std::optional<double> d = corrected_depth(pt.position, pt.ray, *t);
    if (!d) return;
    results[i] = Result{true, *t, *d};
  });

  std::vector<float> out(depth.values().begin(), depth.values().end());
  IterationReport rep;
  rep.candidate_count = n;
  double abs_t_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!results[i].corrected) {
      ++rep.skipped_count;
      continue;
    }
    const int idx = order[i];
    rep.traces.push_back(CorrectionTrace{idx, results[i].t_star,
                                         static_cast<double>(out[idx]),
                                         results[i].depth_after});
    out[idx] = static_cast<float>(results[i].depth_after);
    abs_t_sum += std::abs(results[i].t_star);
    ++rep.corrected_count;
  }
  rep.mean_abs_t =
      rep.corrected_count > 0 ? abs_t_sum / rep.corrected_count : 0.0;
  if (report) *report = std::move(rep);
  return DepthImage(depth.width(), depth.height(), std::move(out),
                    depth.unit());
}

std::pair<DepthImage, IterationReport> correct_iteration(
    const DepthImage& depth, const ColorImage& rgb, const Intrinsics& intr,
    const CorrectionConfig& config, int iteration_number) {
  validate_pair(depth, rgb, intr);
  const CandidateSet candidates =
      detect_candidates(depth, config.ws(), config.tau_percent());
  const OrganizedCloud cloud = build_cloud(depth, intr);
  IterationReport report;
  DepthImage out = apply_corrections(depth, rgb, intr, cloud, candidates,
                                     config, candidates.flagged(), &report);
  report.iteration = iteration_number;
  return {std::move(out), std::move(report)};
}

std::pair<DepthImage, std::vector<IterationReport>> run_pipeline(
    const DepthImage& depth, const ColorImage& rgb, const Intrinsics& intr,
    const CorrectionConfig& config) {
  DepthImage current = depth;
  std::vector<IterationReport> reports;
  for (int k = 1; k <= config.iterations(); ++k) {
    auto [next, report] = correct_iteration(current, rgb, intr, config, k);
    current = std::move(next);
    const bool stalled = report.corrected_count == 0;
    reports.push_back(std::move(report));
    if (stalled) break;
  }
  return {std::move(current), std::move(reports)};
}

}  // namespace defly
