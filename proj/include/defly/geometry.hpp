// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "defly/types.hpp"

namespace defly {

/// Ray from the camera origin through an anchor point.
struct LineOfSight {
  Vec3 anchor;     // measured point on the ray
  Vec3 direction;  // unit vector, ||direction|| = 1

  Vec3 point_at(double t) const { return anchor + t * direction; }
};

/// Per-axis angular coordinates of a 3D point: azimuth = atan(x/z),
/// elevation = atan(y/z), both in degrees. +x right, +y down, +z forward.
struct AngularCoords {
  double azimuth_deg;
  double elevation_deg;
};

/// Rectangular angular window: the per-pixel field of view scaled by
/// epsilon, expressed as half-extents per axis.
struct AngularWindow {
  double half_az_deg;
  double half_el_deg;

  /// half_az = epsilon * F_h / (2M), half_el = epsilon * F_v / (2N).
  static AngularWindow from_intrinsics(const Intrinsics& intr, double epsilon);
};

/// 2D pixel + depth -> 3D camera-frame point:
/// x = (u - cx) * d / fx, y = (v - cy) * d / fy, z = d.
Vec3 unproject(double u, double v, double d, const Intrinsics& intr);

struct PixelDepth {
  double u, v, d;
};

/// 3D point -> real-valued pixel + depth; inverse of unproject. z must be > 0.
PixelDepth project(const Vec3& p, const Intrinsics& intr);

/// Ray through the origin and p; direction = p / ||p||.
LineOfSight line_of_sight(const Vec3& p);

AngularCoords angular_coords(const Vec3& p);

/// True iff both angular offsets fit in the window. Membership depends only
/// on |delta azimuth| and |delta elevation|; there is no depth limit.
bool in_fov_cone(const AngularCoords& center, const AngularCoords& candidate,
                 const AngularWindow& window);

/// Unprojects every valid depth pixel and caches rays and per-axis angles.
/// Invalid pixels are carried through flagged invalid.
OrganizedCloud build_cloud(const DepthImage& depth, const Intrinsics& intr);

}  // namespace defly
