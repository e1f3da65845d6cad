#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "thermocae/thermo_synth.hpp"

using namespace thermocae;

namespace {

double peak(const Image& img) { return *std::max_element(img.pixels.begin(), img.pixels.end()); }

}  // namespace

TEST_SUITE("thermo_synth") {

TEST_CASE("load patterns") {
  const auto train = load_pattern(SplitKind::train, 3);
  const auto test = load_pattern(SplitKind::test, 3);
  CHECK(train.size() == 30);
  CHECK(test.size() == 18);
  for (std::size_t i = 0; i < train.size(); ++i) {
    CHECK(train[i].time_s == doctest::Approx(60.0 * i));
    CHECK((train[i].current_a >= 0.0 && train[i].current_a <= 4.0));
  }
  CHECK(test[17].time_s == doctest::Approx(170.0));
  CHECK(LoadPattern::for_kind(SplitKind::train).frames() == 600);
  CHECK(LoadPattern::for_kind(SplitKind::test).frames() == 180);
  const auto again = load_pattern(SplitKind::train, 3);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(train[i].current_a == again[i].current_a);
  CHECK(load_pattern(SplitKind::train, 4)[0].current_a != train[0].current_a);
  LoadPattern bad;
  bad.duration_s = 1750;
  CHECK_THROWS(load_pattern(bad, 1));
}

TEST_CASE("steady state calibration") {
  const SceneConfig scene;
  const Image cold = steady_state_field(scene, 0.0);
  for (double v : cold.pixels) CHECK(v == 20.0);
  const double hot = peak(steady_state_field(scene, 4.0));
  CHECK(hot >= 50.0);
  CHECK(hot <= 65.0);
  const FaultSpec fault;
  CHECK(fault.power_w() == doctest::Approx(0.5625));
  const double fpeak = peak(steady_state_field(scene, 0.0, &fault));
  CHECK(std::abs(fpeak - 100.0) <= 5.0);
  CHECK_THROWS(steady_state_field(scene, -0.1));
}

TEST_CASE("fault energy scales with the square of the heater current") {
  const SceneConfig scene;
  const Image base = steady_state_field(scene, 1.3);
  FaultSpec a, b;
  a.current_a = 0.15;
  b.current_a = 0.08;
  const Image fa = steady_state_field(scene, 1.3, &a), fb = steady_state_field(scene, 1.3, &b);
  const double ratio = (0.08 * 0.08) / (0.15 * 0.15);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.pixels.size(); ++i) {
    const double da = fa.pixels[i] - base.pixels[i], db = fb.pixels[i] - base.pixels[i];
    worst = std::max(worst, std::abs(db - ratio * da));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("temperature is non-decreasing in load") {
  const SceneConfig scene;
  Image prev = steady_state_field(scene, 0.0);
  for (double i = 0.25; i <= 4.0; i += 0.25) {
    const Image cur = steady_state_field(scene, i);
    for (std::size_t k = 0; k < cur.pixels.size(); ++k) REQUIRE(cur.pixels[k] >= prev.pixels[k]);
    prev = cur;
  }
}

TEST_CASE("step response") {
  const SceneConfig scene;
  const Image a = steady_state_field(scene, 0.5), b = steady_state_field(scene, 3.5);
  const Image inf = step_response(a, b, 1e6, 30.0);
  for (std::size_t k = 0; k < a.pixels.size(); ++k) CHECK(inf.pixels[k] == doctest::Approx(b.pixels[k]).epsilon(1e-15));
  const Image tau = step_response(a, b, 30.0, 30.0);
  const Image half = step_response(step_response(a, b, 7.0, 30.0), b, 7.0, 30.0);
  const Image whole = step_response(a, b, 14.0, 30.0);
  for (std::size_t k = 0; k < a.pixels.size(); k += 97) {
    const double gap0 = a.pixels[k] - b.pixels[k], gap1 = tau.pixels[k] - b.pixels[k];
    CHECK(std::abs(gap1 - std::exp(-1.0) * gap0) < 1e-12);
    CHECK(std::abs(half.pixels[k] - whole.pixels[k]) < 1e-12);
  }
  CHECK_THROWS(step_response(a, b, 0.0, 30.0));
}

TEST_CASE("counts mapping and rendering") {
  SceneConfig scene;
  CHECK(std::lround(temperature_to_counts(20.0, scene)) == 3277);
  CHECK(temperature_to_counts(140.0, scene) == 16383.0);
  CHECK(temperature_to_counts(500.0, scene) == 16383.0);
  CHECK(temperature_to_counts(-50.0, scene) == 0.0);
  for (double t = -10.0; t <= 140.0; t += 0.37) {
    const double c = std::round(temperature_to_counts(t, scene));
    CHECK(std::abs(temperature_to_counts(counts_to_temperature(c, scene), scene) - c) < 1e-9);
    CHECK(std::abs(counts_to_temperature(c, scene) - t) <= 150.0 / 16383.0);
  }

  Rng rng(1);
  const ThermalFrame flat = render_frame(Image(160, 120, 20.0), Homography(), scene, 0.0, rng);
  CHECK(flat.width == 160);
  CHECK(flat.height == 120);
  for (auto c : flat.counts) CHECK(c == 3277);

  Image field(160, 120, 20.0);
  for (std::size_t y = 50; y < 60; ++y)
    for (std::size_t x = 70; x < 80; ++x) field.at(x, y) = 140.0;
  const ThermalFrame sat = render_frame(field, Homography(), scene, 0.0, rng);
  CHECK(sat.counts[55 * 160 + 75] == 16383);

  Rng r1(9), r2(9);
  const Image warm = steady_state_field(scene, 2.0);
  CHECK(render_frame(warm, Homography(), scene, 20.0, r1).counts == render_frame(warm, Homography(), scene, 20.0, r2).counts);
  Rng r3(5);
  for (auto c : render_frame(Image(160, 120, 200.0), Homography(), scene, 2000.0, r3).counts) REQUIRE(c <= 16383);
  const Homography degenerate(std::array<double, 9>{1, 0, 0, 0, 0, 0, 0, 0, 1});
  CHECK_THROWS(render_frame(warm, degenerate, scene, 0.0, rng));
}

TEST_CASE("splits") {
  const SceneConfig scene;
  const ThermalSplit train = generate_split(scene, SplitKind::train, nullptr, 11);
  CHECK(train.frames.size() == 600);
  const FaultSpec fault;
  const ThermalSplit bad = generate_split(scene, SplitKind::test, &fault, 12);
  CHECK(bad.frames.size() == 180);
  for (const auto& f : bad.frames) {
    CHECK(f.fault);
    CHECK(f.heater_current_a == 0.15);
  }
  for (const auto& f : train.frames) CHECK_FALSE(f.fault);
  const ThermalSplit again = generate_split(scene, SplitKind::train, nullptr, 11);
  for (std::size_t i = 0; i < train.frames.size(); i += 37) CHECK(train.frames[i].counts == again.frames[i].counts);

  const auto dir = std::filesystem::temp_directory_path() / "thermocae_split_test";
  ThermalSplit small{SplitKind::test, {bad.frames.begin(), bad.frames.begin() + 5}};
  write_split(small, dir);
  const ThermalSplit back = read_split(dir);
  REQUIRE(back.frames.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.frames[i].counts == small.frames[i].counts);
    CHECK(back.frames[i].fault);
    CHECK(back.frames[i].current_a == small.frames[i].current_a);
    CHECK(back.frames[i].viewpoint.matrix() == small.frames[i].viewpoint.matrix());
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS(read_split(dir));
}

}  // TEST_SUITE
