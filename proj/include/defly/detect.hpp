// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "defly/types.hpp"

namespace defly {

/// Sum of absolute depth differences between (u, v) and its neighbors in the
/// ws x ws window. The window truncates at image borders; invalid neighbors
/// are skipped; the center contributes 0. Throws if the center is invalid.
double sad_score(const DepthImage& depth, int u, int v, int ws);

/// SAD score at every valid pixel; NaN where the depth is invalid.
std::vector<float> sad_map(const DepthImage& depth, int ws);

/// Flags the k = ceil(tau/100 * n_valid) valid pixels with the largest
/// scores. Ties at the cutoff are broken by row-major order (lower index
/// first) so exactly k pixels are flagged.
CandidateSet threshold_top_percent(std::vector<float> scores, int width,
                                   int height, double tau_percent);

/// sad_map followed by threshold_top_percent.
CandidateSet detect_candidates(const DepthImage& depth, int ws,
                               double tau_percent);

}  // namespace defly
