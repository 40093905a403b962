// SPDX-License-Identifier: Apache-2.0

#include "defly/types.hpp"

#include <algorithm>

namespace defly {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

Intrinsics::Intrinsics(double fx, double fy, double cx, double cy, int width,
                       int height, double fov_h_deg, double fov_v_deg)
    : fx_(fx),
      fy_(fy),
      cx_(cx),
      cy_(cy),
      width_(width),
      height_(height),
      fov_h_deg_(fov_h_deg),
      fov_v_deg_(fov_v_deg) {
  require(std::isfinite(fx) && fx > 0.0, "intrinsics: fx must be > 0");
  require(std::isfinite(fy) && fy > 0.0, "intrinsics: fy must be > 0");
  require(std::isfinite(cx) && std::isfinite(cy),
          "intrinsics: principal point must be finite");
  require(width >= 1 && height >= 1,
          "intrinsics: image dimensions must be at least 1x1");
  require(std::isfinite(fov_h_deg) && fov_h_deg > 0.0 && fov_h_deg < 180.0,
          "intrinsics: horizontal FoV must lie in (0, 180) degrees");
  require(std::isfinite(fov_v_deg) && fov_v_deg > 0.0 && fov_v_deg < 180.0,
          "intrinsics: vertical FoV must lie in (0, 180) degrees");
}

DepthImage::DepthImage(int width, int height, std::vector<float> values,
                       std::string unit)
    : width_(width), height_(height), unit_(std::move(unit)),
      values_(std::move(values)) {
  require(width >= 1 && height >= 1, "depth image: empty image");
  require(values_.size() == static_cast<size_t>(width) * height,
          "depth image: value count does not match width*height");
}

int DepthImage::valid_count() const {
  return static_cast<int>(
      std::count_if(values_.begin(), values_.end(), is_valid_depth));
}

ColorImage::ColorImage(int width, int height, std::vector<float> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  require(width >= 1 && height >= 1, "color image: empty image");
  require(rgb_.size() == static_cast<size_t>(width) * height * 3,
          "color image: value count does not match width*height*3");
  for (float v : rgb_) {
    require(v >= 0.0f && v <= 1.0f,
            "color image: channel values must lie in [0, 1]");
  }
}

std::vector<std::array<float, 3>> ColorImage::patch_pixels(int u, int v,
                                                           int s) const {
  require(s >= 1, "color patch: scale must be >= 1");
  require(u >= 0 && v >= 0 && (u + 1) * s <= width_ && (v + 1) * s <= height_,
          "color patch: patch out of bounds");
  std::vector<std::array<float, 3>> out;
  out.reserve(static_cast<size_t>(s) * s);
  for (int y = v * s; y < (v + 1) * s; ++y) {
    for (int x = u * s; x < (u + 1) * s; ++x) {
      const float* p = pixel(x, y);
      out.push_back({p[0], p[1], p[2]});
    }
  }
  return out;
}

OrganizedCloud::OrganizedCloud(int width, int height,
                               std::vector<Point> points,
                               std::vector<double> column_azimuth_deg,
                               std::vector<double> row_elevation_deg)
    : width_(width),
      height_(height),
      points_(std::move(points)),
      column_azimuth_deg_(std::move(column_azimuth_deg)),
      row_elevation_deg_(std::move(row_elevation_deg)) {
  require(width >= 1 && height >= 1, "cloud: empty grid");
  require(points_.size() == static_cast<size_t>(width) * height,
          "cloud: point count does not match grid");
  require(column_azimuth_deg_.size() == static_cast<size_t>(width) &&
              row_elevation_deg_.size() == static_cast<size_t>(height),
          "cloud: angle table size does not match grid");
  valid_count_ = static_cast<int>(std::count_if(
      points_.begin(), points_.end(), [](const Point& p) { return p.valid; }));
}

CandidateSet::CandidateSet(int width, int height, std::vector<float> scores,
                           std::vector<uint8_t> mask, std::vector<int> flagged)
    : width_(width),
      height_(height),
      scores_(std::move(scores)),
      mask_(std::move(mask)),
      flagged_(std::move(flagged)) {
  const size_t n = static_cast<size_t>(width) * height;
  require(width >= 1 && height >= 1, "candidate set: empty grid");
  require(scores_.size() == n && mask_.size() == n,
          "candidate set: map size does not match grid");
  size_t mask_count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (mask_[i]) {
      ++mask_count;
      // Flagged pixels must carry a score, i.e. have valid depth.
      require(!std::isnan(scores_[i]),
              "candidate set: flagged pixel without a score");
    }
  }
  require(mask_count == flagged_.size(),
          "candidate set: mask and outlier list disagree");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kProposed: return "proposed";
    case Method::kNeighborDistance: return "neighbor-distance";
    case Method::kBilateral: return "bilateral";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "proposed") return Method::kProposed;
  if (name == "neighbor-distance") return Method::kNeighborDistance;
  if (name == "bilateral") return Method::kBilateral;
  throw ValidationError("unknown method: " + name);
}

CorrectionConfig::CorrectionConfig()
    : CorrectionConfig(5, 5.0, 0.1, 0.3, 5.0, 3, Method::kProposed, 0) {}

CorrectionConfig::CorrectionConfig(int ws, double tau_percent,
                                   double sigma_color, double sigma_spatial,
                                   double epsilon, int iterations,
                                   Method method, uint64_t seed)
    : ws_(ws),
      tau_percent_(tau_percent),
      sigma_color_(sigma_color),
      sigma_spatial_(sigma_spatial),
      epsilon_(epsilon),
      iterations_(iterations),
      method_(method),
      seed_(seed) {
  require(ws >= 3 && ws % 2 == 1, "config: ws must be odd and >= 3");
  require(std::isfinite(tau_percent) && tau_percent > 0.0 &&
              tau_percent < 100.0,
          "config: tau must lie in (0, 100)");
  require(std::isfinite(sigma_color) && sigma_color > 0.0,
          "config: sigma_c must be > 0");
  require(std::isfinite(sigma_spatial) && sigma_spatial > 0.0,
          "config: sigma_s must be > 0");
  require(std::isfinite(epsilon) && epsilon >= 1.0,
          "config: epsilon must be >= 1");
  require(iterations >= 1, "config: iterations must be >= 1");
}

int validate_pair(const DepthImage& depth, const ColorImage& rgb,
                  const Intrinsics& intr) {
  require(depth.width() == intr.width() && depth.height() == intr.height(),
          "pair: depth dimensions do not match intrinsics");
  require(rgb.width() % depth.width() == 0 &&
              rgb.height() % depth.height() == 0,
          "pair: color resolution is not an integer multiple of depth");
  const int sx = rgb.width() / depth.width();
  const int sy = rgb.height() / depth.height();
  require(sx == sy, "pair: color-to-depth scale differs between axes");
  require(sx >= 1, "pair: color image smaller than depth image");
  return sx;
}

}  // namespace defly
