// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "defly/errors.hpp"

namespace defly {

using Vec3 = Eigen::Vector3d;

/// Pinhole parameters of the depth grid plus the camera's total field of
/// view, from which per-pixel viewing cones are derived.
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy, int width, int height,
             double fov_h_deg, double fov_v_deg);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fov_h_deg() const { return fov_h_deg_; }
  double fov_v_deg() const { return fov_v_deg_; }

  /// Angular extent of a single pixel, per axis.
  double pixel_fov_h_deg() const { return fov_h_deg_ / width_; }
  double pixel_fov_v_deg() const { return fov_v_deg_ / height_; }

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
  double fov_h_deg_, fov_v_deg_;
};

/// Single-channel depth grid. Values are in scene length units (meters by
/// default); a value that is non-finite or <= 0 marks a missing measurement.
class DepthImage {
 public:
  DepthImage(int width, int height, std::vector<float> values,
             std::string unit = "m");

  static bool is_valid_depth(float d) { return std::isfinite(d) && d > 0.0f; }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& unit() const { return unit_; }
  std::span<const float> values() const { return values_; }

  int index(int u, int v) const { return v * width_ + u; }
  float at(int u, int v) const { return values_[index(u, v)]; }
  bool valid_at(int u, int v) const { return is_valid_depth(at(u, v)); }
  bool in_bounds(int u, int v) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }

  int valid_count() const;

 private:
  int width_, height_;
  std::string unit_;
  std::vector<float> values_;
};

/// Aligned RGB grid at an integer multiple of the depth resolution.
/// Channels are normalized to [0, 1]; the s x s block starting at
/// (s*u, s*v) is the color patch of depth pixel (u, v).
class ColorImage {
 public:
  /// `rgb` is row-major interleaved RGB, size width*height*3.
  ColorImage(int width, int height, std::vector<float> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const float> data() const { return rgb_; }

  /// Pointer to the 3 channel values of pixel (x, y) in color coordinates.
  const float* pixel(int x, int y) const {
    return rgb_.data() + 3 * (static_cast<size_t>(y) * width_ + x);
  }

  /// Materialized color patch of depth pixel (u, v) at scale s:
  /// exactly s*s RGB triples in row-major patch order.
  std::vector<std::array<float, 3>> patch_pixels(int u, int v, int s) const;

 private:
  int width_, height_;
  std::vector<float> rgb_;
};

/// Per-depth-pixel 3D points with cached line-of-sight directions and
/// angular coordinates. Points keep a one-to-one mapping to depth pixels:
/// the source pixel of entry i is (i % width, i / width).
///
/// Azimuth depends only on the column and elevation only on the row
/// (per-axis atan(x/z), atan(y/z) of the unprojected ray), so angles are
/// stored as one table per axis.
class OrganizedCloud {
 public:
  struct Point {
    Vec3 position{0, 0, 0};
    Vec3 ray{0, 0, 0};  // unit line-of-sight direction, camera at origin
    bool valid = false;
  };

  OrganizedCloud(int width, int height, std::vector<Point> points,
                 std::vector<double> column_azimuth_deg,
                 std::vector<double> row_elevation_deg);

  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return static_cast<int>(points_.size()); }
  int index(int u, int v) const { return v * width_ + u; }
  std::pair<int, int> pixel_of(int index) const {
    return {index % width_, index / width_};
  }

  const Point& at(int u, int v) const { return points_[index(u, v)]; }
  const Point& operator[](int i) const { return points_[i]; }
  bool valid(int u, int v) const { return at(u, v).valid; }

  double column_azimuth_deg(int u) const { return column_azimuth_deg_[u]; }
  double row_elevation_deg(int v) const { return row_elevation_deg_[v]; }
  std::span<const double> column_azimuths() const { return column_azimuth_deg_; }
  std::span<const double> row_elevations() const { return row_elevation_deg_; }

  int valid_count() const { return valid_count_; }

 private:
  int width_, height_;
  std::vector<Point> points_;
  std::vector<double> column_azimuth_deg_;
  std::vector<double> row_elevation_deg_;
  int valid_count_;
};

/// Outlier-score map plus the flagged flying-pixel candidates.
/// Scores are NaN where the depth is invalid (no score); the mask is true
/// only at valid pixels.
class CandidateSet {
 public:
  CandidateSet(int width, int height, std::vector<float> scores,
               std::vector<uint8_t> mask, std::vector<int> flagged);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const float> scores() const { return scores_; }
  std::span<const uint8_t> mask() const { return mask_; }

  /// Flagged pixel indices in row-major ascending order (the outlier list).
  const std::vector<int>& flagged() const { return flagged_; }
  int count() const { return static_cast<int>(flagged_.size()); }

  bool is_candidate(int index) const { return mask_[index] != 0; }
  bool is_candidate(int u, int v) const { return mask_[v * width_ + u] != 0; }

 private:
  int width_, height_;
  std::vector<float> scores_;
  std::vector<uint8_t> mask_;
  std::vector<int> flagged_;
};

enum class Method { kProposed, kNeighborDistance, kBilateral };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Correction parameters. Defaults: ws = 5, tau = 5%, sigma_c = 0.1,
/// sigma_s = 0.3, epsilon = 5, 3 iterations.
class CorrectionConfig {
 public:
  CorrectionConfig();
  CorrectionConfig(int ws, double tau_percent, double sigma_color,
                   double sigma_spatial, double epsilon, int iterations,
                   Method method, uint64_t seed);

  int ws() const { return ws_; }
  double tau_percent() const { return tau_percent_; }
  double sigma_color() const { return sigma_color_; }
  double sigma_spatial() const { return sigma_spatial_; }
  double epsilon() const { return epsilon_; }
  int iterations() const { return iterations_; }
  Method method() const { return method_; }
  uint64_t seed() const { return seed_; }

 private:
  int ws_;
  double tau_percent_;
  double sigma_color_;
  double sigma_spatial_;
  double epsilon_;
  int iterations_;
  Method method_;
  uint64_t seed_;
};

/// Checks that `rgb` is an integer multiple of the depth resolution and that
/// the depth grid matches the intrinsics. Returns the integer scale s.
int validate_pair(const DepthImage& depth, const ColorImage& rgb,
                  const Intrinsics& intr);

}  // namespace defly
