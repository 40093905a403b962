// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "defly/correct.hpp"
#include "defly/types.hpp"

namespace defly {

/// Root mean squared error over the masked pixels (all pixels when mask is
/// null). Pixels invalid in either image are excluded; an empty evaluation
/// set throws.
double rmse(const DepthImage& est, const DepthImage& gt,
            const std::vector<uint8_t>* mask = nullptr);

/// Mean absolute error with the same masking rules as rmse.
double mae(const DepthImage& est, const DepthImage& gt,
           const std::vector<uint8_t>* mask = nullptr);

struct MethodResult {
  std::string method;   // "native", "neighbor-distance", "bilateral", "proposed"
  double rmse_all = 0.0;
  double mae_all = 0.0;
  std::optional<double> rmse_fp;  // null when the FP mask is empty
  std::optional<double> mae_fp;
  int n_fp = 0;
  int n_valid = 0;
  int iterations = 0;  // 0 for native, 1 for single-pass filters
};

struct EvalReport {
  std::string scene;
  CorrectionConfig config;
  std::vector<MethodResult> methods;
  std::vector<IterationReport> proposed_iterations;

  /// Per-method corrected maps, aligned with `methods` (the native row keeps
  /// the corrupted input). Kept for export; not serialized in reports.
  std::vector<DepthImage> corrected_maps;
};

/// Runs the native (uncorrected) column plus the requested correction
/// methods on one shared candidate set and evaluates each against ground
/// truth, whole-image and FP-only.
EvalReport evaluate_methods(const DepthImage& gt, const DepthImage& corrupted,
                            const ColorImage& rgb, const Intrinsics& intr,
                            const std::vector<uint8_t>& fp_mask,
                            const CorrectionConfig& config,
                            const std::string& scene,
                            const std::vector<Method>& methods = {
                                Method::kNeighborDistance, Method::kBilateral,
                                Method::kProposed});

}  // namespace defly
