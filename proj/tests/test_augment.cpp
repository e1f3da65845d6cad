#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "thermocae/augment.hpp"

using namespace thermocae;

namespace {

Image smooth_image(std::size_t w, std::size_t h) {
  Image img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      img.at(x, y) = 0.5 + 0.25 * std::sin(0.09 * x + 0.02 * y) + 0.2 * std::cos(0.05 * y - 0.03 * x);
  return img;
}

double psnr(const Image& a, const Image& b, std::size_t margin) {
  double se = 0.0;
  std::size_t n = 0;
  for (std::size_t y = margin; y + margin < a.height; ++y)
    for (std::size_t x = margin; x + margin < a.width; ++x) {
      const double d = a.at(x, y) - b.at(x, y);
      se += d * d;
      ++n;
    }
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(n)));
}

AugmentParams all_disabled() {
  AugmentParams p;
  p.stages = {false, false, false, false};
  return p;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("homography algebra") {
  const Homography r = Homography::rotation(30.0, {10.0, 5.0});
  const Homography h = Homography::translation(3, -2) * r * Homography::scaling(1.2, 0.8);
  const Homography id = h * h.inverse();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(id.normalized()(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
  const Point2 p = Homography::rotation(90.0, {0, 0}).apply({1, 0});
  CHECK(std::abs(p.x) < 1e-15);
  CHECK(p.y == doctest::Approx(1.0));
  CHECK_THROWS_AS(Homography::scaling(0.0, 1.0).inverse(), DegenerateTransform);

  const std::array<Point2, 4> src{Point2{0, 0}, Point2{4, 0}, Point2{4, 3}, Point2{0, 3}};
  const std::array<Point2, 4> dst{Point2{0.2, 0.1}, Point2{3.9, 0.3}, Point2{3.7, 2.8}, Point2{0.1, 2.9}};
  const Homography q = Homography::from_points(src, dst);
  for (int k = 0; k < 4; ++k) {
    CHECK(q.apply(src[k]).x == doctest::Approx(dst[k].x).epsilon(1e-12));
    CHECK(q.apply(src[k]).y == doctest::Approx(dst[k].y).epsilon(1e-12));
  }
}

TEST_CASE("params validation") {
  AugmentParams p;
  CHECK_NOTHROW(p.validate());
  p.rotation_deg = {10, -10};
  CHECK_THROWS(p.validate());
  p = AugmentParams{};
  p.out_size = 4;
  CHECK_THROWS(p.validate());
  p = AugmentParams{};
  p.pad_factor = 0.9;
  CHECK_THROWS(p.validate());
  AugmentStages s;
  set_stage(s, "resize", false);
  CHECK_FALSE(s.crop);
  CHECK_THROWS(set_stage(s, "blur", false));
}

TEST_CASE("sample_aug determinism, identity when disabled, range coverage") {
  Rng a(42), b(42);
  CHECK(sample_aug(AugmentParams{}, a) == sample_aug(AugmentParams{}, b));
  Rng c(1);
  CHECK(sample_aug(all_disabled(), c) == SampledAug{});

  Rng r(7);
  double lo = 1e9, hi = -1e9;
  AugmentParams p;
  for (int i = 0; i < 10000; ++i) {
    const SampledAug s = sample_aug(p, r);
    lo = std::min(lo, s.angle_deg);
    hi = std::max(hi, s.angle_deg);
    REQUIRE(s.crop_fraction >= 0.44);
    REQUIRE(s.crop_fraction <= 1.0);
    REQUIRE(std::abs(s.brightness) <= 0.1);
    REQUIRE(std::abs(s.contrast) <= 0.1);
    for (double v : s.corner_shift) REQUIRE((v >= 0.0 && v <= s.perspective_scale && v <= 0.1));
    REQUIRE(build_homography(160, 120, s, p).invertible());
  }
  CHECK(lo >= -45.0);
  CHECK(hi <= 45.0);
  CHECK((hi - lo) / 90.0 >= 0.95);
}

TEST_CASE("disabling one stage leaves the other draws unchanged") {
  AugmentParams p, q;
  q.stages.rotation = false;
  Rng a(3), b(3);
  const SampledAug x = sample_aug(p, a), y = sample_aug(q, b);
  CHECK(y.angle_deg == 0.0);
  CHECK(x.crop_fraction == y.crop_fraction);
  CHECK(x.corner_shift == y.corner_shift);
  CHECK(x.brightness == y.brightness);
}

TEST_CASE("identity draw is a pure scale onto the original extent") {
  const Homography h = build_homography(160, 120, SampledAug{}, AugmentParams{});
  const auto m = h.normalized().matrix();
  const std::array<double, 9> expect{160.0 / 128, 0, 0, 0, 120.0 / 128, 0, 0, 0, 1};
  for (int i = 0; i < 9; ++i) CHECK(std::abs(m[i] - expect[i]) < 1e-12);
}

TEST_CASE("90 degree rotation permutes hot pixels as computed by hand") {
  // 8x8, no padding, output 8x8: source pixel (x, y) lands on (7 - y, x).
  Image img(8, 8, 0.0);
  img.at(1, 2) = 1.0;
  img.at(5, 1) = 0.5;
  AugmentParams p = all_disabled();
  p.pad_factor = 1.0;
  p.out_size = 8;
  SampledAug s;
  s.angle_deg = 90.0;
  const Image out = warp_bilinear(img, build_homography(8, 8, s, p), 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      double expect = 0.0;
      if (x == 5 && y == 1) expect = 1.0;
      if (x == 6 && y == 5) expect = 0.5;
      CHECK(std::abs(out.at(x, y) - expect) < 1e-9);
    }
}

TEST_CASE("warp then inverse warp reconstructs the interior") {
  const Image img = smooth_image(128, 128);
  const Homography h = Homography::translation(64, 64) * Homography::rotation(20.0, {0, 0}) *
                       Homography::scaling(0.9, 0.9) * Homography::translation(-64, -64);
  const Image there = warp_bilinear(img, h, 128, 128);
  const Image back = warp_bilinear(there, h.inverse(), 128, 128);
  CHECK(psnr(img, back, 24) > 40.0);
}

TEST_CASE("warp_bilinear closed forms") {
  const Image img = smooth_image(20, 10);
  CHECK(warp_bilinear(img, Homography(), 20, 10) == img);

  const Image flat(8, 8, 0.3);
  const Image half = warp_bilinear(flat, Homography::scaling(2, 2), 4, 4);
  for (double v : half.pixels) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  Image step(8, 4, 0.0);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 4; x < 8; ++x) step.at(x, y) = 1.0;
  const Image shifted = warp_bilinear(step, Homography::translation(0.5, 0.0), 8, 4);
  for (std::size_t y = 0; y < 4; ++y) {
    CHECK(shifted.at(3, y) == 0.5);
    CHECK(shifted.at(2, y) == 0.0);
    CHECK(shifted.at(4, y) == 1.0);
  }
  // Far outside the source: fill.
  const Image away = warp_bilinear(flat, Homography::translation(100, 0), 4, 4, 0.7);
  for (double v : away.pixels) CHECK(v == 0.7);
}

TEST_CASE("brightness and contrast") {
  const Image img = smooth_image(16, 16);
  CHECK(adjust_brightness_contrast(img, 0.0, 0.0) == img);
  for (double v : adjust_brightness_contrast(Image(4, 4, 0.5), 0.0, 0.1).pixels) CHECK(v == 0.5);
  for (double v : adjust_brightness_contrast(Image(4, 4, 1.0), 0.1, 0.0).pixels) CHECK(v == 1.0);
}

TEST_CASE("identity chain equals plain resize") {
  const Image img = smooth_image(160, 120);
  Rng rng(5);
  const Image a = augment_one(img, all_disabled(), rng);
  const Image b = resize_bilinear(img, 128, 128);
  REQUIRE(a.width == 128);
  double m = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
  CHECK(m < 1e-12);
}

TEST_CASE("augmented outputs stay in range and are deterministic") {
  Image img = smooth_image(160, 120);
  for (auto& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
  Rng r1(9), r2(9);
  CHECK(augment_one(img, AugmentParams{}, r1) == augment_one(img, AugmentParams{}, r2));
  AugmentParams p;
  p.out_size = 32;  // range sweep does not depend on the output size
  Rng r(10);
  for (int i = 0; i < 1000; ++i) {
    const Image out = augment_one(img, p, r);
    REQUIRE(out.width == 32);
    for (double v : out.pixels) REQUIRE((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("dataset cardinality follows the 90/10 convention") {
  std::vector<Image> originals(600, Image(16, 12, 0.4));
  for (std::size_t i = 0; i < originals.size(); ++i) originals[i].at(i % 16, i % 12) = 0.9;
  AugmentParams p;
  p.out_size = 8;
  const Dataset d = build_dataset(originals, 10000, p, 1);
  CHECK(d.train.size() == 9000);
  CHECK(d.validation.size() == 1000);
  std::size_t n_orig = 0;
  for (const auto& r : d.records) n_orig += r.original;
  CHECK(n_orig == 600);
  std::vector<int> seen(10000, 0);
  for (auto i : d.train_index) ++seen[i];
  for (auto i : d.validation_index) ++seen[i];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));

  const Dataset e = build_dataset(originals, 5000, p, 1);
  CHECK(e.train.size() == 4500);
  CHECK(e.validation.size() == 500);

  const Dataset only = build_dataset(originals, 600, p, 1);
  for (const auto& r : only.records) CHECK(r.original);

  const Dataset again = build_dataset(originals, 5000, p, 1);
  CHECK(again.train == e.train);
  CHECK(again.train_index == e.train_index);

  CHECK_THROWS(build_dataset({}, 10, p, 1));
}

TEST_CASE("netpbm round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "thermocae_pgm_test";
  std::filesystem::create_directories(dir);
  std::vector<std::uint16_t> d16{0, 1, 16383, 300, 4096, 12};
  write_pgm(dir / "a.pgm", 3, 2, d16, 16383);
  const GrayImage16 back = read_pgm(dir / "a.pgm");
  CHECK(back.maxval == 16383);
  CHECK(back.data == d16);
  std::vector<std::uint8_t> d8{0, 255, 17, 128};
  write_pgm8(dir / "b.pgm", 2, 2, d8);
  const GrayImage16 b8 = read_pgm(dir / "b.pgm");
  CHECK(b8.maxval == 255);
  CHECK(std::equal(b8.data.begin(), b8.data.end(), d8.begin()));
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), IoError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
