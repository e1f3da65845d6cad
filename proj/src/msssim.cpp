#include "thermocae/msssim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "thermocae/ops.hpp"

namespace thermocae {

std::vector<double> SsimParams::default_weights(std::size_t n) {
  static constexpr double canonical[] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  if (n == 0 || n > 5) throw std::invalid_argument("ssim: between 1 and 5 scales supported");
  std::vector<double> w(canonical, canonical + n);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

std::vector<double> SsimParams::gaussian_taps() const {
  std::vector<double> taps(window);
  const double mid = static_cast<double>(window - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double d = static_cast<double>(i) - mid;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

void SsimParams::validate() const {
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("ssim: window must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("ssim: sigma must be positive");
  if (n_scales == 0 || weights.size() != n_scales)
    throw std::invalid_argument("ssim: need one weight per scale");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("ssim: weights must be positive");
}

namespace {

struct SsimMaps {
  Var luminance;
  Var contrast_structure;
};

void check_pair(Var x, Var y, std::size_t min_side) {
  if (x.shape() != y.shape())
    throw ShapeError("ssim: shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  if (x.value().rank() != 4) throw ShapeError("ssim: expected [N,C,H,W], got " + to_string(x.shape()));
  const std::size_t side = std::min(x.shape()[2], x.shape()[3]);
  if (side < min_side)
    throw ShapeError("ssim: image side " + std::to_string(side) + " below the minimum " +
                     std::to_string(min_side));
}

SsimMaps ssim_maps(Var x, Var y, const SsimParams& p, const std::vector<double>& taps) {
  auto blur = [&](Var v) { return separable_filter_valid(v, taps); };
  Var mu_x = blur(x), mu_y = blur(y);
  Var mu_xx = square(mu_x), mu_yy = square(mu_y), mu_xy = mul(mu_x, mu_y);
  Var var_x = sub(blur(square(x)), mu_xx);
  Var var_y = sub(blur(square(y)), mu_yy);
  Var cov = sub(blur(mul(x, y)), mu_xy);
  Var lum = div(add_scalar(scale(mu_xy, 2.0), p.c1()), add_scalar(add(mu_xx, mu_yy), p.c1()));
  Var cs = div(add_scalar(scale(cov, 2.0), p.c2()), add_scalar(add(var_x, var_y), p.c2()));
  return {lum, cs};
}

}  // namespace

Var ssim(Var x, Var y, const SsimParams& params) {
  params.validate();
  check_pair(x, y, params.window);
  const auto maps = ssim_maps(x, y, params, params.gaussian_taps());
  return per_sample_mean(mul(maps.luminance, maps.contrast_structure));
}

Var ms_ssim(Var x, Var y, const SsimParams& params) {
  params.validate();
  check_pair(x, y, params.min_size());
  const auto taps = params.gaussian_taps();
  Var result{};
  for (std::size_t s = 0; s < params.n_scales; ++s) {
    const auto maps = ssim_maps(x, y, params, taps);
    const bool coarsest = s + 1 == params.n_scales;
    Var term = coarsest ? per_sample_mean(mul(maps.luminance, maps.contrast_structure))
                        : per_sample_mean(maps.contrast_structure);
    term = clamp_pow(term, params.weights[s]);
    result = s == 0 ? term : mul(result, term);
    if (!coarsest) {
      x = avg_pool2(x);
      y = avg_pool2(y);
    }
  }
  return result;
}

Var msssim_loss(Var x, Var y, const SsimParams& params) {
  Var m = mean(ms_ssim(x, y, params));
  return add_scalar(scale(m, -1.0), 1.0);
}

}  // namespace thermocae
