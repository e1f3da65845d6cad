#include "thermocae/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "thermocae/util.hpp"

namespace thermocae {

ScoreMethod parse_score_method(const std::string& name) {
  if (name == "smoothed_max") return ScoreMethod::smoothed_max;
  if (name == "mean") return ScoreMethod::mean;
  throw std::invalid_argument("unknown score method '" + name + "'");
}

std::string to_string(ScoreMethod method) {
  return method == ScoreMethod::mean ? "mean" : "smoothed_max";
}

Image anomaly_map(const Image& x, const Image& x_hat) {
  if (x.width != x_hat.width || x.height != x_hat.height)
    throw std::invalid_argument("anomaly_map: image sizes differ");
  Image out(x.width, x.height);
  for (std::size_t i = 0; i < x.pixels.size(); ++i) out.pixels[i] = std::abs(x.pixels[i] - x_hat.pixels[i]);
  return out;
}

double anomaly_score(const Image& map, ScoreMethod method, std::size_t k) {
  if (map.empty()) throw std::invalid_argument("anomaly_score: empty map");
  if (method == ScoreMethod::mean) {
    double s = 0.0;
    for (double v : map.pixels) s += v;
    return s / static_cast<double>(map.pixels.size());
  }
  if (k == 0 || k > map.width || k > map.height)
    throw std::invalid_argument("anomaly_score: smoothing window " + std::to_string(k) +
                                " does not fit a " + std::to_string(map.width) + "x" +
                                std::to_string(map.height) + " map");
  // Horizontal window sums, then vertical; every window adds its terms in the same order.
  const std::size_t ow = map.width - k + 1, oh = map.height - k + 1;
  std::vector<double> rows(ow * map.height);
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += map.at(x + i, y);
      rows[y * ow + x] = s;
    }
  double best = -std::numeric_limits<double>::infinity();
  const double area = static_cast<double>(k * k);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += rows[(y + j) * ow + x];
      best = std::max(best, s / area);
    }
  return best;
}

namespace {

void check_labels(std::span<const double> scores, std::span<const int> labels, std::size_t& pos,
                  std::size_t& neg) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc: scores and labels differ in length");
  pos = neg = 0;
  for (int l : labels) {
    if (l == 1) ++pos;
    else if (l == 0) ++neg;
    else throw std::invalid_argument("roc: labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc: both classes must be present");
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_labels(scores, labels, pos, neg);
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("roc: NaN score");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (labels[order[i]] == 1 ? tp : fp)++;
    roc.thresholds.push_back(t);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
  }
  // Integrate in counts so that every segment is exact up to one final division.
  double area2 = 0.0;  // twice the area, in units of (fp * tp)
  std::size_t prev_tp = 0, prev_fp = 0;
  tp = fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (labels[order[i]] == 1 ? tp : fp)++;
    area2 += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp);
    prev_tp = tp;
    prev_fp = fp;
  }
  roc.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_labels(scores, labels, pos, neg);
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc) {
  auto os = open_text_output(path);
  os << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i)
    os << format_real(roc.thresholds[i]) << ',' << format_real(roc.fpr[i]) << ',' << format_real(roc.tpr[i]) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

Colormap parse_colormap(const std::string& name) {
  if (name == "gray") return Colormap::gray;
  if (name == "iron") return Colormap::iron;
  throw std::invalid_argument("unknown colormap '" + name + "'");
}

const std::array<std::array<std::uint8_t, 3>, 256>& iron_table() {
  static const auto table = [] {
    struct Stop {
      double at, r, g, b;
    };
    constexpr Stop stops[] = {{0.0, 0, 0, 0},       {0.2, 32, 0, 140},     {0.45, 204, 0, 119},
                              {0.7, 255, 128, 0},   {0.88, 255, 220, 0},   {1.0, 255, 255, 255}};
    std::array<std::array<std::uint8_t, 3>, 256> t{};
    for (std::size_t i = 0; i < 256; ++i) {
      const double v = static_cast<double>(i) / 255.0;
      std::size_t s = 0;
      while (s + 2 < std::size(stops) && v > stops[s + 1].at) ++s;
      const Stop& a = stops[s];
      const Stop& b = stops[s + 1];
      const double f = (v - a.at) / (b.at - a.at);
      t[i] = {static_cast<std::uint8_t>(std::lround(a.r + f * (b.r - a.r))),
              static_cast<std::uint8_t>(std::lround(a.g + f * (b.g - a.g))),
              static_cast<std::uint8_t>(std::lround(a.b + f * (b.b - a.b)))};
    }
    return t;
  }();
  return table;
}

std::vector<std::uint8_t> normalize_to_u8(const Image& img) {
  if (img.empty()) throw std::invalid_argument("normalize_to_u8: empty image");
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double mn = *lo, span = *hi - *lo;
  std::vector<std::uint8_t> out(img.pixels.size(), 0);
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround((img.pixels[i] - mn) / span * 255.0));
  return out;
}

void export_heatmap(const Image& img, const std::filesystem::path& path, Colormap colormap) {
  const auto idx = normalize_to_u8(img);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (colormap == Colormap::gray) {
    write_pgm8(path, img.width, img.height, idx);
    return;
  }
  const auto& table = iron_table();
  std::vector<std::uint8_t> rgb(idx.size() * 3);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int c = 0; c < 3; ++c) rgb[3 * i + c] = table[idx[i]][c];
  write_ppm8(path, img.width, img.height, rgb);
}

}  // namespace thermocae
