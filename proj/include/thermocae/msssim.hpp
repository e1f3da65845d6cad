#pragma once

#include <cstddef>
#include <vector>

#include "thermocae/graph.hpp"

namespace thermocae {

/// Gaussian-window SSIM constants. Defaults: 11x11 window, sigma 1.5,
/// K1 0.01, K2 0.03, dynamic range 1, four scales with the first four
/// standard MS-SSIM weights renormalised to sum to one.
struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  std::size_t n_scales = 4;
  std::vector<double> weights = default_weights(4);

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  /// Normalised 1-D taps; their outer product is the 2-D window.
  std::vector<double> gaussian_taps() const;
  /// Smallest image side admitting n_scales scales.
  std::size_t min_size() const { return (window - 1) * (std::size_t{1} << (n_scales - 1)) + 1; }
  void validate() const;

  /// First n of (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), renormalised.
  static std::vector<double> default_weights(std::size_t n);
};

/// Mean SSIM per image over the valid window region. x, y: [N, C, H, W] -> [N].
Var ssim(Var x, Var y, const SsimParams& params = {});
/// Multi-scale SSIM per image -> [N]. Contrast-structure terms at every scale,
/// luminance only at the coarsest; 2x2 mean pooling between scales. Negative
/// terms are clamped to zero before exponentiation.
Var ms_ssim(Var x, Var y, const SsimParams& params = {});
/// 1 - mean over the batch of ms_ssim.
Var msssim_loss(Var x, Var y, const SsimParams& params = {});

}  // namespace thermocae
