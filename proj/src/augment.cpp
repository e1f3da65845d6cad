#include "thermocae/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace thermocae {

namespace {

void check_range(const char* name, const Range& r) {
  if (!(r.lo <= r.hi)) throw std::invalid_argument(std::string("augment: range ") + name + " has lo > hi");
}

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"crop", "rotation", "perspective", "brightness_contrast"};
  return names;
}

void set_stage(AugmentStages& stages, const std::string& name, bool enabled) {
  if (name == "crop" || name == "resize") stages.crop = enabled;
  else if (name == "rotation") stages.rotation = enabled;
  else if (name == "perspective") stages.perspective = enabled;
  else if (name == "brightness_contrast") stages.brightness_contrast = enabled;
  else throw std::invalid_argument("augment: unknown stage '" + name + "'");
}

void AugmentParams::validate() const {
  check_range("rotation_deg", rotation_deg);
  check_range("perspective_scale", perspective_scale);
  check_range("crop_fraction", crop_fraction);
  check_range("brightness", brightness);
  check_range("contrast", contrast);
  if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("augment: fill must lie in [0, 1]");
  if (out_size < 8) throw std::invalid_argument("augment: out_size must be >= 8");
  if (!(pad_factor >= 1.0)) throw std::invalid_argument("augment: pad_factor must be >= 1");
  if (!(crop_fraction.lo > 0.0) || crop_fraction.hi > pad_factor)
    throw std::invalid_argument("augment: crop_fraction must lie in (0, pad_factor]");
  if (perspective_scale.lo < 0.0 || perspective_scale.hi >= 0.5)
    throw std::invalid_argument("augment: perspective_scale must lie in [0, 0.5)");
}

SampledAug sample_aug(const AugmentParams& params, Rng& rng) {
  SampledAug a;
  // Every stage consumes its draws even when disabled, so toggling one stage
  // does not shift the random stream seen by the others.
  const double angle = draw(rng, params.rotation_deg);
  const double pscale = draw(rng, params.perspective_scale);
  std::array<double, 8> shifts{};
  for (auto& s : shifts) s = rng.uniform() * pscale;
  const double crop = draw(rng, params.crop_fraction);
  const double cu = rng.uniform(), cv = rng.uniform();
  const double b = draw(rng, params.brightness);
  const double c = draw(rng, params.contrast);
  if (params.stages.rotation) a.angle_deg = angle;
  if (params.stages.perspective) {
    a.perspective_scale = pscale;
    a.corner_shift = shifts;
  }
  if (params.stages.crop) {
    a.crop_fraction = crop;
    a.crop_u = cu;
    a.crop_v = cv;
  }
  if (params.stages.brightness_contrast) {
    a.brightness = b;
    a.contrast = c;
  }
  return a;
}

Homography build_homography(std::size_t img_w, std::size_t img_h, const SampledAug& aug,
                            const AugmentParams& params) {
  if (img_w == 0 || img_h == 0) throw std::invalid_argument("build_homography: empty image");
  const double w = static_cast<double>(img_w), h = static_cast<double>(img_h);
  const double pw = params.pad_factor * w, ph = params.pad_factor * h;
  const Homography pad = Homography::translation((pw - w) / 2.0, (ph - h) / 2.0);
  const Homography rotate = Homography::rotation(aug.angle_deg, {pw / 2.0, ph / 2.0});

  const auto& s = aug.corner_shift;
  const std::array<Point2, 4> corners{Point2{0, 0}, Point2{pw, 0}, Point2{pw, ph}, Point2{0, ph}};
  const std::array<Point2, 4> moved{Point2{s[0] * pw, s[1] * ph}, Point2{pw - s[2] * pw, s[3] * ph},
                                    Point2{pw - s[4] * pw, ph - s[5] * ph},
                                    Point2{s[6] * pw, ph - s[7] * ph}};
  const bool flat = std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
  const Homography perspective = flat ? Homography() : Homography::from_points(corners, moved);

  const double cw = aug.crop_fraction * w, ch = aug.crop_fraction * h;
  const double cx = cw / 2.0 + aug.crop_u * (pw - cw);
  const double cy = ch / 2.0 + aug.crop_v * (ph - ch);
  const Homography crop = Homography::translation(-(cx - cw / 2.0), -(cy - ch / 2.0));
  const double out = static_cast<double>(params.out_size);
  const Homography resize = Homography::scaling(out / cw, out / ch);

  const Homography forward = resize * crop * perspective * rotate * pad;
  if (!forward.invertible()) throw DegenerateTransform("build_homography: degenerate transform");
  return forward.inverse();
}

Image warp_bilinear(const Image& image, const Homography& h, std::size_t out_w, std::size_t out_h,
                    double fill) {
  Image out(out_w, out_h);
#pragma omp parallel for schedule(static) if (out_w * out_h > 65536)
  for (std::size_t v = 0; v < out_h; ++v)
    for (std::size_t u = 0; u < out_w; ++u) {
      const Point2 p = h.apply({static_cast<double>(u) + 0.5, static_cast<double>(v) + 0.5});
      out.at(u, v) = sample_bilinear(image, p.x - 0.5, p.y - 0.5, fill);
    }
  return out;
}

Image adjust_brightness_contrast(const Image& image, double brightness, double contrast) {
  Image out = image;
  if (brightness == 0.0 && contrast == 0.0) return out;
  for (auto& v : out.pixels) v = std::clamp((v - 0.5) * (1.0 + contrast) + 0.5 + brightness, 0.0, 1.0);
  return out;
}

Image augment_one(const Image& original, const AugmentParams& params, Rng& rng, SampledAug* drawn) {
  if (original.empty()) throw std::invalid_argument("augment_one: empty image");
  SampledAug aug = sample_aug(params, rng);
  Homography h;
  try {
    h = build_homography(original.width, original.height, aug, params);
  } catch (const DegenerateTransform&) {
    aug = sample_aug(params, rng);
    h = build_homography(original.width, original.height, aug, params);
  }
  if (drawn) *drawn = aug;
  Image out = warp_bilinear(original, h, params.out_size, params.out_size, params.fill);
  return adjust_brightness_contrast(out, aug.brightness, aug.contrast);
}

std::size_t train_count(std::size_t n_total) { return n_total * 9 / 10; }

Dataset build_dataset(const std::vector<Image>& originals, std::size_t n_total, const AugmentParams& params,
                      std::uint64_t seed) {
  if (originals.empty()) throw std::invalid_argument("build_dataset: no original images");
  if (n_total < originals.size())
    throw std::invalid_argument("build_dataset: n_total smaller than the number of originals");
  params.validate();
  const std::size_t n_orig = originals.size();
  std::vector<Image> all(n_total);
  Dataset ds;
  ds.records.resize(n_total);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n_total; ++i) {
    DatasetRecord& rec = ds.records[i];
    if (i < n_orig) {
      rec.source = i;
      rec.original = true;
      all[i] = resize_bilinear(originals[i], params.out_size, params.out_size);
    } else {
      Rng rng(derive_seed(seed, i));
      rec.source = rng.below(n_orig);
      all[i] = augment_one(originals[rec.source], params, rng, &rec.aug);
    }
  }
  std::vector<std::size_t> order(n_total);
  for (std::size_t i = 0; i < n_total; ++i) order[i] = i;
  Rng perm(derive_seed(seed, ~std::uint64_t{0}));
  for (std::size_t i = n_total; i > 1; --i) std::swap(order[i - 1], order[perm.below(i)]);
  const std::size_t n_train = train_count(n_total);
  for (std::size_t j = 0; j < n_total; ++j) {
    const std::size_t i = order[j];
    ds.records[i].train = j < n_train;
    if (j < n_train) {
      ds.train_index.push_back(i);
      ds.train.push_back(std::move(all[i]));
    } else {
      ds.validation_index.push_back(i);
      ds.validation.push_back(std::move(all[i]));
    }
  }
  return ds;
}

}  // namespace thermocae
