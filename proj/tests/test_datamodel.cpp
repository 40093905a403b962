// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "defly/types.hpp"
#include "test_util.hpp"

using namespace defly;

TEST_CASE("intrinsics constructor enforces invariants") {
  CHECK_NOTHROW(Intrinsics(500, 500, 320, 240, 640, 480, 60, 45));
  CHECK_THROWS_AS(Intrinsics(0, 500, 320, 240, 640, 480, 60, 45),
                  ValidationError);
  CHECK_THROWS_AS(Intrinsics(500, -1, 320, 240, 640, 480, 60, 45),
                  ValidationError);
  CHECK_THROWS_AS(Intrinsics(500, 500, 320, 240, 0, 480, 60, 45),
                  ValidationError);
  CHECK_THROWS_AS(Intrinsics(500, 500, 320, 240, 640, 480, 180, 45),
                  ValidationError);
  CHECK_THROWS_AS(Intrinsics(500, 500, 320, 240, 640, 480, 60, 0),
                  ValidationError);
}

TEST_CASE("per-pixel fov is strictly positive") {
  const Intrinsics intr(500, 500, 320, 240, 640, 480, 88, 66);
  CHECK(intr.pixel_fov_h_deg() == doctest::Approx(88.0 / 640));
  CHECK(intr.pixel_fov_v_deg() == doctest::Approx(66.0 / 480));
  CHECK(intr.pixel_fov_h_deg() > 0.0);
}

TEST_CASE("depth image validity sentinel") {
  DepthImage img(2, 2, {1.5f, 0.0f, -2.0f, std::nanf("")});
  CHECK(img.valid_at(0, 0));
  CHECK_FALSE(img.valid_at(1, 0));
  CHECK_FALSE(img.valid_at(0, 1));
  CHECK_FALSE(img.valid_at(1, 1));
  CHECK(img.valid_count() == 1);
  CHECK(img.unit() == "m");
}

TEST_CASE("depth image rejects bad shapes") {
  CHECK_THROWS_AS(DepthImage(2, 2, {1.0f, 2.0f}), ValidationError);
  CHECK_THROWS_AS(DepthImage(0, 2, {}), ValidationError);
}

TEST_CASE("color image range and shape checks") {
  CHECK_NOTHROW(ColorImage(1, 1, {0.0f, 0.5f, 1.0f}));
  CHECK_THROWS_AS(ColorImage(1, 1, {0.0f, 0.5f}), ValidationError);
  CHECK_THROWS_AS(ColorImage(1, 1, {0.0f, 0.5f, 1.5f}), ValidationError);
  CHECK_THROWS_AS(ColorImage(1, 1, {-0.1f, 0.5f, 1.0f}), ValidationError);
  CHECK_THROWS_AS(ColorImage(1, 1, {std::nanf(""), 0.5f, 1.0f}),
                  ValidationError);
}

TEST_CASE("validate_pair reports the integer scale") {
  const Intrinsics intr100(100, 100, 50, 40, 100, 80, 20, 16);
  const auto depth = testutil::constant_depth(100, 80, 2.0f);
  const auto rgb = testutil::constant_color(600, 480, testutil::kRed);
  CHECK(validate_pair(depth, rgb, intr100) == 6);

  const Intrinsics intr10(50, 50, 5, 5, 10, 10, 5, 5);
  const auto depth10 = testutil::constant_depth(10, 10, 1.0f);
  CHECK(validate_pair(depth10, testutil::constant_color(10, 10, testutil::kRed),
                      intr10) == 1);

  // 15/10 = 1.5 is not an integer scale.
  CHECK_THROWS_AS(validate_pair(
                      depth10, testutil::constant_color(15, 15, testutil::kRed),
                      intr10),
                  ValidationError);
  // Same total pixel ratio but different per-axis scales.
  CHECK_THROWS_AS(validate_pair(
                      depth10, testutil::constant_color(20, 30, testutil::kRed),
                      intr10),
                  ValidationError);
  // Depth dims must match the intrinsics.
  CHECK_THROWS_AS(validate_pair(
                      testutil::constant_depth(11, 10, 1.0f),
                      testutil::constant_color(11, 10, testutil::kRed), intr10),
                  ValidationError);
}

TEST_CASE("patch extraction returns exactly s^2 in-bounds triples") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> dim(1, 8), scale_dist(1, 4);
  std::uniform_real_distribution<float> channel(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = dim(rng), h = dim(rng), s = scale_dist(rng);
    std::vector<float> rgb(static_cast<size_t>(w) * h * s * s * 3);
    for (float& v : rgb) v = channel(rng);
    const ColorImage img(w * s, h * s, std::move(rgb));
    std::uniform_int_distribution<int> cu(0, w - 1), cv(0, h - 1);
    const int u = cu(rng), v = cv(rng);
    const auto patch = img.patch_pixels(u, v, s);
    REQUIRE(patch.size() == static_cast<size_t>(s) * s);
    for (const auto& px : patch) {
      for (float c : px) {
        CHECK(c >= 0.0f);
        CHECK(c <= 1.0f);
      }
    }
    // Spot-check the anchor pixel of the patch.
    CHECK(patch[0][0] == img.pixel(u * s, v * s)[0]);
  }
  const ColorImage img(4, 4, std::vector<float>(48, 0.25f));
  CHECK_THROWS_AS(img.patch_pixels(2, 0, 2), ValidationError);
}

TEST_CASE("correction config invariants") {
  CHECK_NOTHROW(CorrectionConfig());
  const CorrectionConfig def;
  CHECK(def.ws() == 5);
  CHECK(def.tau_percent() == 5.0);
  CHECK(def.sigma_color() == 0.1);
  CHECK(def.sigma_spatial() == 0.3);
  CHECK(def.epsilon() == 5.0);

  auto cfg = [](int ws, double tau, double sc, double ss, double eps, int it) {
    return CorrectionConfig(ws, tau, sc, ss, eps, it, Method::kProposed, 0);
  };
  CHECK_THROWS_AS(cfg(4, 5, 0.1, 0.3, 5, 3), ValidationError);   // even ws
  CHECK_THROWS_AS(cfg(1, 5, 0.1, 0.3, 5, 3), ValidationError);   // ws < 3
  CHECK_THROWS_AS(cfg(5, 0, 0.1, 0.3, 5, 3), ValidationError);   // tau = 0
  CHECK_THROWS_AS(cfg(5, 100, 0.1, 0.3, 5, 3), ValidationError); // tau = 100
  CHECK_THROWS_AS(cfg(5, 5, 0, 0.3, 5, 3), ValidationError);     // sigma_c
  CHECK_THROWS_AS(cfg(5, 5, 0.1, 0, 5, 3), ValidationError);     // sigma_s
  CHECK_THROWS_AS(cfg(5, 5, 0.1, 0.3, 0.5, 3), ValidationError); // eps < 1
  CHECK_THROWS_AS(cfg(5, 5, 0.1, 0.3, 5, 0), ValidationError);   // iterations
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::kProposed, Method::kNeighborDistance,
                   Method::kBilateral}) {
    CHECK(method_from_name(method_name(m)) == m);
  }
  CHECK_THROWS_AS(method_from_name("median"), ValidationError);
}
