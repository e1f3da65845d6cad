#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "thermocae/homography.hpp"
#include "thermocae/image.hpp"
#include "thermocae/rng.hpp"

namespace thermocae {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-stage switches used for leave-one-out ablations. `crop` covers the
/// pad + crop ("resize") stage; the final resize to out_size always runs.
struct AugmentStages {
  bool crop = true;
  bool rotation = true;
  bool perspective = true;
  bool brightness_contrast = true;
};

/// Names accepted by set_stage(): crop, rotation, perspective, brightness_contrast.
void set_stage(AugmentStages& stages, const std::string& name, bool enabled);
const std::vector<std::string>& stage_names();

struct AugmentParams {
  double pad_factor = 1.5;
  Range rotation_deg{-45.0, 45.0};
  Range perspective_scale{0.0, 0.1};
  Range crop_fraction{0.44, 1.0};
  Range brightness{-0.1, 0.1};
  Range contrast{-0.1, 0.1};
  std::size_t out_size = 128;
  /// Value written where the warp samples outside the source image.
  double fill = 0.0;
  AugmentStages stages{};

  /// Throws std::invalid_argument on a bad range or size.
  void validate() const;
};

/// One concrete draw of the augmentation chain. Defaults are the identity.
struct SampledAug {
  double angle_deg = 0.0;
  double perspective_scale = 0.0;
  /// Inward corner shifts as fractions of the padded width/height, corners in
  /// order top-left, top-right, bottom-right, bottom-left; (dx, dy) pairs.
  std::array<double, 8> corner_shift{};
  double crop_fraction = 1.0;
  /// Crop centre position within its admissible span, 0..1 per axis.
  double crop_u = 0.5;
  double crop_v = 0.5;
  double brightness = 0.0;
  double contrast = 0.0;

  friend bool operator==(const SampledAug&, const SampledAug&) = default;
};

SampledAug sample_aug(const AugmentParams& params, Rng& rng);

/// Output-pixel -> source-pixel transform (continuous coordinates) for the
/// chain pad -> rotate -> perspective -> crop -> resize.
Homography build_homography(std::size_t img_w, std::size_t img_h, const SampledAug& aug,
                            const AugmentParams& params);

/// Inverse-mapping warp: out(u, v) = image(H(u + 0.5, v + 0.5) - 0.5).
Image warp_bilinear(const Image& image, const Homography& out_to_src, std::size_t out_w,
                    std::size_t out_h, double fill = 0.0);

/// clamp((v - 0.5)(1 + c) + 0.5 + b, 0, 1)
Image adjust_brightness_contrast(const Image& image, double brightness, double contrast);

/// Full chain on one image; result is out_size x out_size in [0, 1].
/// `drawn`, when given, receives the parameters actually used.
Image augment_one(const Image& original, const AugmentParams& params, Rng& rng,
                  SampledAug* drawn = nullptr);

struct DatasetRecord {
  std::size_t source = 0;
  bool original = false;
  bool train = false;
  SampledAug aug{};
};

struct Dataset {
  std::vector<Image> train;
  std::vector<Image> validation;
  /// One record per generated image, in generation order.
  std::vector<DatasetRecord> records;
  /// records index of train[i] / validation[i].
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> validation_index;
};

/// The originals (resized only) plus n_total - |originals| augmented draws,
/// split 90/10 by a seeded permutation. Draw i uses stream derive_seed(seed, i).
Dataset build_dataset(const std::vector<Image>& originals, std::size_t n_total,
                      const AugmentParams& params, std::uint64_t seed);

/// Number of training images for a dataset of n_total (the rest validate).
std::size_t train_count(std::size_t n_total);

}  // namespace thermocae
