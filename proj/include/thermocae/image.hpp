#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace thermocae {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel real image, row-major. Pixel (x, y) covers [x, x+1) x [y, y+1).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Bilinear sample at continuous pixel-index coordinates (pixel centres are
/// integers). Points more than half a pixel outside the image return `fill`;
/// points within that half-pixel margin clamp to the edge.
double sample_bilinear(const Image& img, double sx, double sy, double fill);

/// Plain bilinear resize with pixel-centre alignment.
Image resize_bilinear(const Image& img, std::size_t out_w, std::size_t out_h);

// Netpbm binary I/O (P5 grey, P6 RGB). Samples above 255 use two big-endian bytes.
struct GrayImage16 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint16_t maxval = 65535;
  std::vector<std::uint16_t> data;
};

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint16_t> data, std::uint16_t maxval);
void write_pgm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const std::uint8_t> data);
void write_ppm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const std::uint8_t> rgb);
GrayImage16 read_pgm(const std::filesystem::path& path);

/// [0,1] image <-> 16-bit samples at the given maxval (round to nearest).
GrayImage16 quantize(const Image& img, std::uint16_t maxval = 65535);
Image dequantize(const GrayImage16& img);

}  // namespace thermocae
