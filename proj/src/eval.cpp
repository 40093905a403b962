// SPDX-License-Identifier: Apache-2.0

#include "defly/eval.hpp"

#include <cmath>

#include "defly/baselines.hpp"
#include "defly/detect.hpp"

namespace defly {

namespace {

struct Residuals {
  double sum_sq = 0.0;
  double sum_abs = 0.0;
  long count = 0;
};

Residuals accumulate(const DepthImage& est, const DepthImage& gt,
                     const std::vector<uint8_t>* mask) {
  if (est.width() != gt.width() || est.height() != gt.height()) {
    throw ValidationError("metrics: image dimensions differ");
  }
  const size_t n = est.values().size();
  if (mask && mask->size() != n) {
    throw ValidationError("metrics: mask size does not match images");
  }
  Residuals r;
  for (size_t i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    const float e = est.values()[i];
    const float g = gt.values()[i];
    if (!DepthImage::is_valid_depth(e) || !DepthImage::is_valid_depth(g)) {
      continue;
    }
    const double diff = static_cast<double>(e) - g;
    r.sum_sq += diff * diff;
    r.sum_abs += std::abs(diff);
    ++r.count;
  }
  if (r.count == 0) {
    throw ValidationError("metrics: empty evaluation set");
  }
  return r;
}

MethodResult evaluate_one(const std::string& name, const DepthImage& est,
                          const DepthImage& gt,
                          const std::vector<uint8_t>& fp_mask,
                          int iterations) {
  MethodResult res;
  res.method = name;
  res.iterations = iterations;
  const Residuals all = accumulate(est, gt, nullptr);
  res.rmse_all = std::sqrt(all.sum_sq / all.count);
  res.mae_all = all.sum_abs / all.count;
  res.n_valid = static_cast<int>(all.count);

  bool any_fp = false;
  for (uint8_t m : fp_mask) {
    if (m) {
      any_fp = true;
      break;
    }
  }
  if (any_fp) {
    const Residuals fp = accumulate(est, gt, &fp_mask);
    res.rmse_fp = std::sqrt(fp.sum_sq / fp.count);
    res.mae_fp = fp.sum_abs / fp.count;
    res.n_fp = static_cast<int>(fp.count);
  }
  return res;
}

}  // namespace

double rmse(const DepthImage& est, const DepthImage& gt,
            const std::vector<uint8_t>* mask) {
  const Residuals r = accumulate(est, gt, mask);
  return std::sqrt(r.sum_sq / r.count);
}

double mae(const DepthImage& est, const DepthImage& gt,
           const std::vector<uint8_t>* mask) {
  const Residuals r = accumulate(est, gt, mask);
  return r.sum_abs / r.count;
}

EvalReport evaluate_methods(const DepthImage& gt, const DepthImage& corrupted,
                            const ColorImage& rgb, const Intrinsics& intr,
                            const std::vector<uint8_t>& fp_mask,
                            const CorrectionConfig& config,
                            const std::string& scene,
                            const std::vector<Method>& methods) {
  const int scale = validate_pair(corrupted, rgb, intr);
  if (gt.width() != corrupted.width() || gt.height() != corrupted.height()) {
    throw ValidationError("evaluate: ground truth dimensions differ");
  }
  if (fp_mask.size() != gt.values().size()) {
    throw ValidationError("evaluate: FP mask size does not match images");
  }

  // One candidate set shared by the single-pass methods; the first iteration
  // of the proposed pipeline recomputes the identical set from the same map.
  const CandidateSet candidates =
      detect_candidates(corrupted, config.ws(), config.tau_percent());

  EvalReport report;
  report.scene = scene;
  report.config = config;

  report.methods.push_back(
      evaluate_one("native", corrupted, gt, fp_mask, 0));
  report.corrected_maps.push_back(corrupted);

  for (Method m : methods) {
    switch (m) {
      case Method::kNeighborDistance: {
        DepthImage est = neighbor_distance_correct(corrupted, candidates,
                                                   config.ws());
        report.methods.push_back(
            evaluate_one(method_name(m), est, gt, fp_mask, 1));
        report.corrected_maps.push_back(std::move(est));
        break;
      }
      case Method::kBilateral: {
        DepthImage est = joint_bilateral_correct(
            corrupted, rgb, scale, candidates, config.ws(),
            config.sigma_spatial(), config.sigma_color());
        report.methods.push_back(
            evaluate_one(method_name(m), est, gt, fp_mask, 1));
        report.corrected_maps.push_back(std::move(est));
        break;
      }
      case Method::kProposed: {
        auto [est, iter_reports] = run_pipeline(corrupted, rgb, intr, config);
        report.methods.push_back(
            evaluate_one(method_name(m), est, gt, fp_mask,
                         static_cast<int>(iter_reports.size())));
        report.corrected_maps.push_back(std::move(est));
        report.proposed_iterations = std::move(iter_reports);
        break;
      }
    }
  }
  return report;
}

}  // namespace defly
