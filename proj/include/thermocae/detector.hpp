#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "thermocae/image.hpp"

namespace thermocae {

enum class ScoreMethod { smoothed_max, mean };

ScoreMethod parse_score_method(const std::string& name);
std::string to_string(ScoreMethod method);

/// |x - x_hat| pointwise.
Image anomaly_map(const Image& x, const Image& x_hat);

/// smoothed_max: largest k x k box average over positions where the window
/// fits entirely inside the map. mean: plain average of the map.
double anomaly_score(const Image& map, ScoreMethod method = ScoreMethod::smoothed_max,
                     std::size_t smooth_k = 5);

struct AnomalyResult {
  Image map;
  double score = 0.0;
  std::string input;
  int label = -1;  // 0 normal, 1 anomalous, -1 unknown
};

struct RocCurve {
  std::vector<double> thresholds;  // first entry is +inf for the (0,0) point
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// Threshold sweep over every distinct score; score >= threshold is flagged.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// P(anomalous > normal) + 0.5 P(tie), by brute-force pair counting.
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc);

enum class Colormap { gray, iron };

Colormap parse_colormap(const std::string& name);

/// Fixed 256-entry table running black, indigo, magenta, orange, yellow, white.
const std::array<std::array<std::uint8_t, 3>, 256>& iron_table();

/// Per-image min-max scaling to 0..255 (round to nearest). A flat image maps to 0.
std::vector<std::uint8_t> normalize_to_u8(const Image& img);

/// gray -> binary P5, iron -> binary P6; both maxval 255.
void export_heatmap(const Image& img, const std::filesystem::path& path, Colormap colormap);

}  // namespace thermocae
