// SPDX-License-Identifier: Apache-2.0

#include "defly/geometry.hpp"

#include <cmath>

#include "defly/parallel.hpp"

namespace defly {

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}

AngularWindow AngularWindow::from_intrinsics(const Intrinsics& intr,
                                             double epsilon) {
  if (!(std::isfinite(epsilon) && epsilon >= 1.0)) {
    throw ValidationError("angular window: epsilon must be >= 1");
  }
  AngularWindow w{epsilon * intr.fov_h_deg() / (2.0 * intr.width()),
                  epsilon * intr.fov_v_deg() / (2.0 * intr.height())};
  if (!(w.half_az_deg > 0.0 && w.half_az_deg < 90.0 && w.half_el_deg > 0.0 &&
        w.half_el_deg < 90.0)) {
    throw ValidationError("angular window: half extents must lie in (0, 90)");
  }
  return w;
}

Vec3 unproject(double u, double v, double d, const Intrinsics& intr) {
  if (!(std::isfinite(d) && d > 0.0)) {
    throw ValidationError("unproject: depth must be finite and > 0");
  }
  if (u < 0.0 || u > intr.width() - 1 || v < 0.0 || v > intr.height() - 1) {
    throw ValidationError("unproject: pixel outside the grid");
  }
  return Vec3{(u - intr.cx()) * d / intr.fx(),
              (v - intr.cy()) * d / intr.fy(), d};
}

PixelDepth project(const Vec3& p, const Intrinsics& intr) {
  if (!(p.z() > 0.0)) {
    throw ValidationError("project: point behind the camera (z <= 0)");
  }
  return PixelDepth{intr.fx() * p.x() / p.z() + intr.cx(),
                    intr.fy() * p.y() / p.z() + intr.cy(), p.z()};
}

LineOfSight line_of_sight(const Vec3& p) {
  const double norm = p.norm();
  if (!(norm > 0.0)) {
    throw ValidationError("line of sight: zero-length point");
  }
  return LineOfSight{p, p / norm};
}

AngularCoords angular_coords(const Vec3& p) {
  if (!(p.z() > 0.0)) {
    throw ValidationError("angular coords: z must be > 0");
  }
  return AngularCoords{std::atan(p.x() / p.z()) * kRadToDeg,
                       std::atan(p.y() / p.z()) * kRadToDeg};
}

bool in_fov_cone(const AngularCoords& center, const AngularCoords& candidate,
                 const AngularWindow& window) {
  return std::abs(candidate.azimuth_deg - center.azimuth_deg) <=
             window.half_az_deg &&
         std::abs(candidate.elevation_deg - center.elevation_deg) <=
             window.half_el_deg;
}

OrganizedCloud build_cloud(const DepthImage& depth, const Intrinsics& intr) {
  if (depth.width() != intr.width() || depth.height() != intr.height()) {
    throw ValidationError("build cloud: depth dimensions do not match intrinsics");
  }
  const int w = depth.width();
  const int h = depth.height();

  // Azimuth is a function of the column only and elevation of the row only:
  // every point unprojected from column u has x/z = (u - cx)/fx.
  std::vector<double> col_az(w), row_el(h);
  for (int u = 0; u < w; ++u) {
    col_az[u] = std::atan((u - intr.cx()) / intr.fx()) * kRadToDeg;
  }
  for (int v = 0; v < h; ++v) {
    row_el[v] = std::atan((v - intr.cy()) / intr.fy()) * kRadToDeg;
  }

  std::vector<OrganizedCloud::Point> points(static_cast<size_t>(w) * h);
  par::parallel_for(h, [&](int v) {
    for (int u = 0; u < w; ++u) {
      const float d = depth.at(u, v);
      if (!DepthImage::is_valid_depth(d)) continue;
      OrganizedCloud::Point& pt = points[static_cast<size_t>(v) * w + u];
      pt.position = unproject(u, v, d, intr);
      pt.ray = pt.position / pt.position.norm();
      pt.valid = true;
    }
  });
  return OrganizedCloud(w, h, std::move(points), std::move(col_az),
                        std::move(row_el));
}

}  // namespace defly
