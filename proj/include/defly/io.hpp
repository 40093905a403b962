// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "defly/eval.hpp"
#include "defly/synth.hpp"
#include "defly/types.hpp"

namespace defly {

/// On-disk camera description: pinhole parameters plus the factor that maps
/// 16-bit file integers to depth units.
struct IntrinsicsFile {
  Intrinsics intrinsics;
  std::string depth_unit = "m";
  double depth_scale = 0.001;  // file integer -> unit factor, > 0
};

IntrinsicsFile load_intrinsics(const std::string& path);
void save_intrinsics(const IntrinsicsFile& file, const std::string& path);

/// Loads a depth map from 16-bit grayscale PNG (integer k -> k * depth_scale,
/// 0 -> invalid) or PFM (floats scaled by depth_scale). Dispatches on the
/// file extension (.png / .pfm).
DepthImage load_depth(const std::string& path, double depth_scale,
                      const std::string& unit = "m");

/// Writes a 16-bit grayscale PNG; invalid pixels become 0, valid depths are
/// rounded to depth / depth_scale and clamped to [0, 65535].
void save_depth_png(const DepthImage& depth, const std::string& path,
                    double depth_scale);

/// Writes depths as a grayscale PFM (invalid pixels stored as 0).
void save_depth_pfm(const DepthImage& depth, const std::string& path);

/// Grayscale little-endian PFM I/O for float maps (e.g. score maps).
std::vector<float> load_pfm(const std::string& path, int* width, int* height);
void save_pfm(std::span<const float> values, int width, int height,
              const std::string& path);

/// Loads an 8- or 16-bit 3-channel RGB PNG, normalized to [0, 1] by the max
/// code value.
ColorImage load_rgb(const std::string& path);

/// Loads an 8-bit grayscale PNG as a boolean mask (nonzero -> true) and
/// checks it against the expected dimensions.
std::vector<uint8_t> load_mask_png(const std::string& path, int expect_width,
                                   int expect_height);

/// Writes a boolean mask as an 8-bit grayscale PNG (true -> 255).
void save_mask_png(std::span<const uint8_t> mask, int width, int height,
                   const std::string& path);

enum class PlyFormat { kBinaryLittleEndian, kAscii };

/// Exports the valid cloud points as a PLY with float x,y,z and uint8
/// red,green,blue (patch-mean color per point). Invalid pixels are omitted.
void export_ply(const OrganizedCloud& cloud, const ColorImage& rgb,
                const std::string& path,
                PlyFormat format = PlyFormat::kBinaryLittleEndian);

/// Writes `<base>.csv` and `<base>.json` (a .csv/.json extension on `path`
/// is treated as the base). Throws if the report has no method rows.
void write_report(const EvalReport& report, const std::string& path);

void save_injection_record(const InjectionRecord& record,
                           const std::string& path);

}  // namespace defly
