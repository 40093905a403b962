// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "defly/types.hpp"

namespace defly {

/// Deterministic RNG with every derivation spelled out, so fixtures are
/// reproducible from (algorithm, seed) alone. Core generator: mt19937_64.
/// Distributions are hand-derived here instead of std::* ones, which are
/// implementation-defined.
class SeededRng {
 public:
  static constexpr const char* kAlgorithm =
      "mt19937_64; uniform01 = (next >> 11) / (2^53 - 1); "
      "gaussian = Box-Muller; shuffle = Fisher-Yates with next % n";

  explicit SeededRng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1], both endpoints reachable (53-bit mantissa grid).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) / 9007199254740991.0;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double gaussian() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  size_t bounded(size_t n) { return next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Ground truth of one synthetic corruption run.
struct InjectionRecord {
  struct Entry {
    int index;             // row-major pixel index
    float original_depth;
    float injected_depth;
    float window_min;
    float window_max;
  };

  int width = 0, height = 0;
  std::vector<uint8_t> fp_mask;  // true exactly at injected pixels
  std::vector<Entry> entries;
  double fraction = 0.0;
  int ws = 0;
  uint64_t seed = 0;
  std::string rng_algorithm;

  int count() const { return static_cast<int>(entries.size()); }
};

/// Injects synthetic flying pixels: draws ceil(fraction * |edges|) edge
/// pixels uniformly without replacement, and re-assigns each to a uniform
/// depth within the [min, max] of the valid depths in its ws x ws window
/// (endpoints included). Edge pixels with invalid depth or without two
/// distinct window depths are skipped and the draw continues. Deterministic
/// for a fixed seed. Throws if no edge pixel has valid depth.
std::pair<DepthImage, InjectionRecord> inject_flying_pixels(
    const DepthImage& depth_gt, const std::vector<uint8_t>& edges,
    double fraction, int ws, uint64_t seed);

/// Fronto-parallel two-plane fixture: left half at near_depth, right half at
/// far_depth, each filled with its own color at the given RGB scale, plus
/// optional Gaussian depth noise. The masks partition the pixels by plane.
struct TwoPlaneScene {
  DepthImage depth;
  ColorImage rgb;
  std::vector<uint8_t> near_mask;
  std::vector<uint8_t> far_mask;
};

TwoPlaneScene make_two_plane_scene(double near_depth, double far_depth,
                                   std::array<float, 3> near_color,
                                   std::array<float, 3> far_color, int width,
                                   int height, const Intrinsics& intr,
                                   double noise_sd, uint64_t seed = 0,
                                   int scale = 1);

}  // namespace defly
