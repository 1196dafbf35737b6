#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <random>
#include <vector>

#include "remix/transforms.hpp"

using namespace remix;

namespace {

Image random_image(int h, int w, int c, std::mt19937& rng) {
  Image im(h, w, c);
  for (float& v : im.data) v = static_cast<float>(uniform_unit(rng));
  return im;
}

// Uniform spec over all kinds and bins (grid-point magnitudes).
TransformSpec random_spec(std::mt19937& rng) {
  const auto kind = static_cast<TransformKind>(uniform_below(rng, kTransformKindCount));
  std::vector<int> bins;
  for (const ParamInfo& p : transform_params(kind)) bins.push_back(uniform_below(rng, p.bins));
  return make_spec(kind, bins);
}

bool in_unit_range(const Image& im) {
  for (float v : im.data) {
    if (!(v >= 0.0f && v <= 1.0f)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("magnitude bins span their ranges", "[imaging]") {
  CHECK(bin_to_magnitude(TransformKind::kRotate, 0, 8) == Catch::Approx(0.0).margin(1e-7));
  CHECK(bin_to_magnitude(TransformKind::kRotate, 0, 0) == Catch::Approx(-45.0));
  CHECK(bin_to_magnitude(TransformKind::kRotate, 0, 16) == Catch::Approx(45.0));
  CHECK(bin_to_magnitude(TransformKind::kBrightness, 0, 16) == Catch::Approx(1.0));
  CHECK(bin_to_magnitude(TransformKind::kBrightness, 0, 0) == Catch::Approx(0.0));
  CHECK(bin_to_magnitude(TransformKind::kShearX, 0, 0) == Catch::Approx(-0.3));
  CHECK(bin_to_magnitude(TransformKind::kCutout, 0, 16) == Catch::Approx(0.5));
  CHECK(bin_to_magnitude(TransformKind::kPosterize, 0, 0) == Catch::Approx(1.0));

  SECTION("monotone in the bin index") {
    for (int kind = 0; kind < kTransformKindCount; ++kind) {
      const auto k = static_cast<TransformKind>(kind);
      for (size_t p = 0; p < transform_params(k).size(); ++p) {
        const ParamInfo& info = transform_params(k)[p];
        for (int b = 1; b < info.bins; ++b) {
          CHECK(bin_to_magnitude(k, static_cast<int>(p), b) >
                bin_to_magnitude(k, static_cast<int>(p), b - 1));
        }
      }
    }
  }

  SECTION("rescale method parameter is categorical with six values") {
    REQUIRE(transform_params(TransformKind::kRescale).size() == 2);
    CHECK(transform_params(TransformKind::kRescale)[1].bins == kRescaleMethodCount);
    CHECK(bin_to_magnitude(TransformKind::kRescale, 1, 3) == Catch::Approx(3.0));
  }

  SECTION("contract violations throw") {
    CHECK_THROWS_AS(bin_to_magnitude(TransformKind::kRotate, 0, 17), std::out_of_range);
    CHECK_THROWS_AS(bin_to_magnitude(TransformKind::kRotate, 0, -1), std::out_of_range);
    CHECK_THROWS_AS(bin_to_magnitude(TransformKind::kRescale, 1, 6), std::out_of_range);
    CHECK_THROWS_AS(bin_to_magnitude(TransformKind::kRotate, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(bin_to_magnitude(TransformKind::kIdentity, 0, 0), std::invalid_argument);
  }
}

TEST_CASE("identity settings return the input exactly", "[imaging]") {
  std::mt19937 rng(7);
  const Image im = random_image(16, 16, 3, rng);

  const auto check_identity = [&](TransformKind kind, std::initializer_list<int> bins) {
    const Image out = apply_transform(im, make_spec(kind, bins), rng);
    INFO(kind_name(kind));
    REQUIRE(out.same_shape(im));
    CHECK(max_abs_diff(out, im) <= 1e-6f);
  };

  check_identity(TransformKind::kIdentity, {});
  check_identity(TransformKind::kAutocontrast, {0});
  check_identity(TransformKind::kBlur, {0});
  check_identity(TransformKind::kEqualize, {0});
  check_identity(TransformKind::kInvert, {0});
  check_identity(TransformKind::kBrightness, {16});
  check_identity(TransformKind::kColor, {16});
  check_identity(TransformKind::kContrast, {16});
  check_identity(TransformKind::kSharpness, {16});
  check_identity(TransformKind::kSmooth, {16});
  check_identity(TransformKind::kPosterize, {16});
  check_identity(TransformKind::kCutout, {0});
  check_identity(TransformKind::kRotate, {8});
  check_identity(TransformKind::kShearX, {8});
  check_identity(TransformKind::kShearY, {8});
  check_identity(TransformKind::kTranslateX, {8});
  check_identity(TransformKind::kTranslateY, {8});
  check_identity(TransformKind::kSolarize, {16});
  for (int method = 0; method < kRescaleMethodCount; ++method) {
    check_identity(TransformKind::kRescale, {16, method});
  }
}

TEST_CASE("transforms preserve shape and range", "[imaging]") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = uniform_int(rng, 4, 24);
    const int w = uniform_int(rng, 4, 24);
    const int c = uniform_below(rng, 2) == 0 ? 1 : 3;
    const Image im = random_image(h, w, c, rng);
    const TransformSpec spec = random_spec(rng);
    const Image out = apply_transform(im, spec, rng);
    INFO(kind_name(spec.kind));
    REQUIRE(out.same_shape(im));
    REQUIRE(in_unit_range(out));
  }
}

TEST_CASE("pointwise kernels match hand arithmetic", "[imaging]") {
  std::mt19937 rng(3);

  SECTION("brightness scales toward black") {
    Image im(2, 2, 1);
    im.data = {0.2f, 0.4f, 0.6f, 0.8f};
    const Image zero = apply_transform(im, make_spec(TransformKind::kBrightness, {0}), rng);
    for (float v : zero.data) CHECK(v == 0.0f);
    const Image half = apply_transform(im, make_spec(TransformKind::kBrightness, {8}), rng);
    CHECK(half.data[3] == Catch::Approx(0.4f));
  }

  SECTION("invert at full blend flips values") {
    Image im(1, 2, 1);
    im.data = {0.25f, 1.0f};
    const Image out = apply_transform(im, make_spec(TransformKind::kInvert, {16}), rng);
    CHECK(out.data[0] == Catch::Approx(0.75f));
    CHECK(out.data[1] == Catch::Approx(0.0f));
  }

  SECTION("solarize inverts strictly above the threshold") {
    Image im(1, 3, 1);
    im.data = {0.3f, 0.5f, 0.7f};
    TransformSpec spec = make_spec(TransformKind::kSolarize, {8});  // threshold 0.5
    const Image out = apply_transform(im, spec, rng);
    CHECK(out.data[0] == Catch::Approx(0.3f));
    CHECK(out.data[1] == Catch::Approx(0.5f));
    CHECK(out.data[2] == Catch::Approx(0.3f));
  }

  SECTION("posterize to one bit keeps only the top bit") {
    Image im(1, 2, 1);
    im.data = {0.4f, 0.6f};
    const Image out = apply_transform(im, make_spec(TransformKind::kPosterize, {0}), rng);
    CHECK(out.data[0] == Catch::Approx(0.0f));
    CHECK(out.data[1] == Catch::Approx(128.0f / 255.0f));
  }

  SECTION("contrast at zero collapses to the mean luminance") {
    Image im(1, 2, 1);
    im.data = {0.2f, 0.6f};
    const Image out = apply_transform(im, make_spec(TransformKind::kContrast, {0}), rng);
    CHECK(out.data[0] == Catch::Approx(0.4f));
    CHECK(out.data[1] == Catch::Approx(0.4f));
  }

  SECTION("autocontrast at full blend stretches to the unit range") {
    Image im(1, 3, 1);
    im.data = {0.2f, 0.4f, 0.6f};
    const Image out = apply_transform(im, make_spec(TransformKind::kAutocontrast, {16}), rng);
    CHECK(out.data[0] == Catch::Approx(0.0f));
    CHECK(out.data[1] == Catch::Approx(0.5f));
    CHECK(out.data[2] == Catch::Approx(1.0f));
  }

  SECTION("color has no effect on an already gray image") {
    std::mt19937 r2(5);
    Image im(4, 4, 3);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const float v = static_cast<float>(uniform_unit(r2));
        for (int c = 0; c < 3; ++c) im.at(y, x, c) = v;
      }
    }
    const Image out = apply_transform(im, make_spec(TransformKind::kColor, {0}), rng);
    CHECK(max_abs_diff(out, im) <= 1e-6f);
  }
}

TEST_CASE("cutout grays an exact square", "[imaging]") {
  std::mt19937 rng(13);
  Image im(32, 32, 1, 0.25f);
  const Image out = apply_transform(im, make_spec(TransformKind::kCutout, {16}), rng);  // L = 0.5
  int gray = 0;
  for (float v : out.data) {
    if (v == 0.5f) ++gray;
  }
  CHECK(gray == 16 * 16);
}

TEST_CASE("integer translation moves content exactly", "[imaging]") {
  std::mt19937 rng(17);
  Image im(32, 32, 1, 0.0f);
  im.at(16, 16, 0) = 1.0f;
  // lambda = 4/32 moves content four pixels to the right
  TransformSpec spec{TransformKind::kTranslateX, {{0, 0, 0.125f}}};
  const Image out = apply_transform(im, spec, rng);
  CHECK(out.at(16, 20, 0) == Catch::Approx(1.0f));
  CHECK(out.at(16, 16, 0) == Catch::Approx(0.0f));
}

TEST_CASE("nearest rescale duplicates crop pixels", "[imaging]") {
  std::mt19937 rng(19);
  Image im(4, 4, 1, 0.0f);
  // center 2x2 crop: rows 1..2, cols 1..2
  im.at(1, 1, 0) = 0.1f;
  im.at(1, 2, 0) = 0.2f;
  im.at(2, 1, 0) = 0.3f;
  im.at(2, 2, 0) = 0.4f;
  TransformSpec spec{TransformKind::kRescale,
                     {{0, 8, 0.5f}, {1, static_cast<int>(RescaleMethod::kNearest),
                                     static_cast<float>(RescaleMethod::kNearest)}}};
  const Image out = apply_transform(im, spec, rng);
  CHECK(out.at(0, 0, 0) == Catch::Approx(0.1f));
  CHECK(out.at(0, 3, 0) == Catch::Approx(0.2f));
  CHECK(out.at(3, 0, 0) == Catch::Approx(0.3f));
  CHECK(out.at(3, 3, 0) == Catch::Approx(0.4f));
}

TEST_CASE("weak augmentation stays within the shift budget", "[imaging]") {
  std::mt19937 rng(23);
  Image im(32, 32, 1, 0.0f);
  im.at(16, 16, 0) = 1.0f;

  SECTION("disabled flip and zero shift is the identity") {
    const Image out = weak_augment(im, false, 0.0f, rng);
    CHECK(max_abs_diff(out, im) == 0.0f);
  }

  SECTION("mirror is an involution") {
    std::mt19937 r2(29);
    const Image noisy = random_image(9, 12, 3, r2);
    CHECK(max_abs_diff(mirror_horizontal(mirror_horizontal(noisy)), noisy) == 0.0f);
  }

  SECTION("shifts are integers drawn from plus-minus floor(0.125 * 32)") {
    std::array<bool, 9> seen_dx{};
    std::array<bool, 9> seen_dy{};
    for (int trial = 0; trial < 800; ++trial) {
      const Image out = weak_augment(im, false, 0.125f, rng);
      int py = -1, px = -1;
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          if (out.at(y, x, 0) == 1.0f) {
            py = y;
            px = x;
          }
        }
      }
      REQUIRE(py >= 0);
      const int dy = py - 16;
      const int dx = px - 16;
      REQUIRE(std::abs(dy) <= 4);
      REQUIRE(std::abs(dx) <= 4);
      seen_dx[dx + 4] = true;
      seen_dy[dy + 4] = true;
    }
    for (bool b : seen_dx) CHECK(b);
    for (bool b : seen_dy) CHECK(b);
  }

  SECTION("out-of-range shift fraction throws") {
    CHECK_THROWS_AS(weak_augment(im, true, 0.6f, rng), std::invalid_argument);
  }
}

TEST_CASE("quarter turns are lossless and orientation-consistent", "[imaging]") {
  Image im(2, 2, 1);
  im.data = {0.1f, 0.2f, 0.3f, 0.4f};  // [[a, b], [c, d]]

  SECTION("one counterclockwise turn") {
    const Image out = rotate90(im, 1);
    CHECK(out.at(0, 0, 0) == 0.2f);  // b
    CHECK(out.at(0, 1, 0) == 0.4f);  // d
    CHECK(out.at(1, 0, 0) == 0.1f);  // a
    CHECK(out.at(1, 1, 0) == 0.3f);  // c
  }

  SECTION("two turns mirror both axes") {
    const Image out = rotate90(im, 2);
    CHECK(out.at(0, 0, 0) == 0.4f);
    CHECK(out.at(0, 1, 0) == 0.3f);
    CHECK(out.at(1, 0, 0) == 0.2f);
    CHECK(out.at(1, 1, 0) == 0.1f);
  }

  SECTION("four turns compose to the identity") {
    std::mt19937 rng(31);
    const Image noisy = random_image(8, 8, 3, rng);
    CHECK(max_abs_diff(rotate90(noisy, 4), noisy) == 0.0f);
    CHECK(max_abs_diff(rotate90(rotate90(noisy, 1), 3), noisy) == 0.0f);
    CHECK(max_abs_diff(rotate90(rotate90(noisy, 3), 1), noisy) == 0.0f);
  }

  SECTION("non-square input is rejected") {
    Image rect(2, 3, 1);
    CHECK_THROWS_AS(rotate90(rect, 1), std::invalid_argument);
  }
}
