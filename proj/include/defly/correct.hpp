// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "defly/geometry.hpp"
#include "defly/types.hpp"

namespace defly {

/// A correction neighbor: a valid, non-candidate cloud point inside the
/// angular window of the candidate's line of sight.
struct Neighbor {
  int index;             // row-major pixel index in the cloud
  Vec3 position;
  double color_distance;
  double weight;         // in (0, 1]
};

struct NeighborSet {
  int center_index = -1;
  std::vector<Neighbor> members;

  bool empty() const { return members.empty(); }
  size_t size() const { return members.size(); }
};

/// Mean over patch positions of the squared L2 color difference:
/// (1/s^2) * sum_k ||a_k - b_k||^2.
double color_distance(const ColorImage& rgb, int scale, int ua, int va,
                      int ub, int vb);

/// Patch-shaped overload for already materialized patches.
double color_distance(std::span<const std::array<float, 3>> a,
                      std::span<const std::array<float, 3>> b);

/// exp(-distance / (2 sigma_c^2)); always in (0, 1] in exact arithmetic.
double color_weight(double color_dist, double sigma_color);

/// Color-weighted similarity of two depth pixels' patches.
double patch_weight(const ColorImage& rgb, int scale, int ua, int va, int ub,
                    int vb, double sigma_color);

/// Collects every valid, non-candidate point whose angular coordinates fall
/// inside `window` around the center's line of sight, excluding the center
/// itself. Weights come from the RGB patches. Members whose weight
/// underflows to zero carry no information and are dropped.
NeighborSet fov_neighbors(const OrganizedCloud& cloud, const ColorImage& rgb,
                          int scale, int center_u, int center_v,
                          const AngularWindow& window,
                          const CandidateSet& candidates, double sigma_color);

/// Closed-form minimizer of the weighted squared distances between
/// p + t*r and the neighbors:
///   t* = -sum_j w_j * r . (p - p_j) / sum_j w_j.
/// Returns nullopt for an empty set or when the total weight underflows
/// (< 1e-300).
std::optional<double> solve_t(const Vec3& p, const Vec3& ray,
                              const NeighborSet& neighbors);

/// Depth of the moved point p + t*r. Returns nullopt when the corrected
/// depth would be non-positive (correction rejected).
std::optional<double> corrected_depth(const Vec3& p, const Vec3& ray,
                                      double t_star);

struct CorrectionTrace {
  int index;            // row-major pixel index
  double t_star;
  double depth_before;
  double depth_after;
};

struct IterationReport {
  int iteration = 0;
  int candidate_count = 0;
  int corrected_count = 0;
  int skipped_count = 0;   // empty neighborhoods or rejected corrections
  double mean_abs_t = 0.0;
  std::vector<CorrectionTrace> traces;  // per-pixel t* diagnostics
};

/// Applies the closed-form correction to the given candidates, reading only
/// `depth` and writing each result into a fresh copy (batch semantics).
/// `order` lists candidate pixel indices; the output map is identical for
/// any permutation of it. Optional `report` receives counts and traces in
/// `order` order.
DepthImage apply_corrections(const DepthImage& depth, const ColorImage& rgb,
                             const Intrinsics& intr,
                             const OrganizedCloud& cloud,
                             const CandidateSet& candidates,
                             const CorrectionConfig& config,
                             std::span<const int> order,
                             IterationReport* report = nullptr);

/// One detection + correction pass: recomputes SAD scores and candidates on
/// the input map, corrects every candidate with a usable neighborhood, and
/// copies everything else unchanged.
std::pair<DepthImage, IterationReport> correct_iteration(
    const DepthImage& depth, const ColorImage& rgb, const Intrinsics& intr,
    const CorrectionConfig& config, int iteration_number = 1);

/// Runs correct_iteration config.iterations() times, re-detecting candidates
/// on each intermediate map with the same threshold. Iterations are
/// independent; the loop exits early once an iteration corrects nothing.
std::pair<DepthImage, std::vector<IterationReport>> run_pipeline(
    const DepthImage& depth, const ColorImage& rgb, const Intrinsics& intr,
    const CorrectionConfig& config);

}  // namespace defly
