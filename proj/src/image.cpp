#include "thermocae/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace thermocae {

double sample_bilinear(const Image& img, double sx, double sy, double fill) {
  const double w = static_cast<double>(img.width), h = static_cast<double>(img.height);
  if (!(sx >= -0.5 && sx <= w - 0.5 && sy >= -0.5 && sy <= h - 0.5)) return fill;
  const double fx0 = std::floor(sx), fy0 = std::floor(sy);
  const double ax = sx - fx0, ay = sy - fy0;
  const long last_x = static_cast<long>(img.width) - 1, last_y = static_cast<long>(img.height) - 1;
  const long x0 = std::clamp(static_cast<long>(fx0), 0L, last_x);
  const long x1 = std::clamp(static_cast<long>(fx0) + 1, 0L, last_x);
  const long y0 = std::clamp(static_cast<long>(fy0), 0L, last_y);
  const long y1 = std::clamp(static_cast<long>(fy0) + 1, 0L, last_y);
  const double* row0 = img.pixels.data() + y0 * img.width;
  const double* row1 = img.pixels.data() + y1 * img.width;
  const double top = (1.0 - ax) * row0[x0] + ax * row0[x1];
  const double bottom = (1.0 - ax) * row1[x0] + ax * row1[x1];
  return (1.0 - ay) * top + ay * bottom;
}

Image resize_bilinear(const Image& img, std::size_t out_w, std::size_t out_h) {
  Image out(out_w, out_h);
  const double kx = static_cast<double>(img.width) / static_cast<double>(out_w);
  const double ky = static_cast<double>(img.height) / static_cast<double>(out_h);
  for (std::size_t v = 0; v < out_h; ++v)
    for (std::size_t u = 0; u < out_w; ++u)
      out.at(u, v) = sample_bilinear(img, (static_cast<double>(u) + 0.5) * kx - 0.5,
                                     (static_cast<double>(v) + 0.5) * ky - 0.5, 0.0);
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint16_t> data, std::uint16_t maxval) {
  if (data.size() != width * height) throw IoError("write_pgm: data size does not match dimensions");
  if (maxval == 0) throw IoError("write_pgm: maxval must be positive");
  auto os = open_out(path);
  os << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  std::vector<char> bytes;
  if (maxval > 255) {
    bytes.reserve(data.size() * 2);
    for (auto v : data) {
      const auto s = std::min(v, maxval);
      bytes.push_back(static_cast<char>(s >> 8));
      bytes.push_back(static_cast<char>(s & 0xFF));
    }
  } else {
    for (auto v : data) bytes.push_back(static_cast<char>(std::min(v, maxval)));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(os, path);
}

void write_pgm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const std::uint8_t> data) {
  if (data.size() != width * height) throw IoError("write_pgm8: data size does not match dimensions");
  auto os = open_out(path);
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  finish(os, path);
}

void write_ppm8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                std::span<const std::uint8_t> rgb) {
  if (rgb.size() != 3 * width * height) throw IoError("write_ppm8: data size does not match dimensions");
  auto os = open_out(path);
  os << "P6\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  finish(os, path);
}

GrayImage16 read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  if (header_token(is) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  GrayImage16 img;
  try {
    img.width = std::stoul(header_token(is));
    img.height = std::stoul(header_token(is));
    const unsigned long maxval = std::stoul(header_token(is));
    if (maxval == 0 || maxval > 65535) throw IoError(path.string() + ": bad maxval");
    img.maxval = static_cast<std::uint16_t>(maxval);
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  const std::size_t n = img.width * img.height;
  const std::size_t bpp = img.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> bytes(n * bpp);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(is.gcount()) != bytes.size()) throw IoError(path.string() + ": truncated PGM");
  img.data.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.data[i] = bpp == 2 ? static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]) : bytes[i];
  return img;
}

GrayImage16 quantize(const Image& img, std::uint16_t maxval) {
  GrayImage16 q{img.width, img.height, maxval, std::vector<std::uint16_t>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    q.data[i] = static_cast<std::uint16_t>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * maxval));
  return q;
}

Image dequantize(const GrayImage16& img) {
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.pixels[i] = static_cast<double>(img.data[i]) / static_cast<double>(img.maxval);
  return out;
}

}  // namespace thermocae
