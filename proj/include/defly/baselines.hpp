// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "defly/types.hpp"

namespace defly {

/// Depth-only comparison filter: partitions the valid non-candidate depths
/// in each candidate's ws x ws window into two clusters by 2-means
/// (initialized at the window min and max) and snaps the candidate to the
/// mean of the nearer cluster. Fewer than two distinct depths snap to the
/// single available depth; an empty window leaves the pixel unchanged.
/// Only candidate pixels are modified.
DepthImage neighbor_distance_correct(const DepthImage& depth,
                                     const CandidateSet& candidates, int ws);

/// Joint bilateral filter applied selectively to the candidates:
///   d_hat = sum_j w_s * w_c * d_j / sum_j w_s * w_c
/// over valid non-candidate window neighbors, where w_c uses the patch color
/// distance and w_s uses pixel offsets normalized by the window radius
/// floor(ws/2). A window with no usable weight leaves the pixel unchanged.
DepthImage joint_bilateral_correct(const DepthImage& depth,
                                   const ColorImage& rgb, int scale,
                                   const CandidateSet& candidates, int ws,
                                   double sigma_spatial, double sigma_color);

}  // namespace defly
