#pragma once

// Raw numeric kernels behind the differentiable ops. The top-level namespace
// holds the OpenMP versions used in training; kernels::reference holds the
// serial loop nests they are tested and benchmarked against.

#include <cstddef>
#include <span>

namespace thermocae {

struct ConvSpec {
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t padding = 1;
  std::size_t output_padding = 1;  // transposed convolution only
};

/// Geometry of a strided convolution mapping a "wide" map (channels_in,
/// in_h, in_w) to a "narrow" one (channels_out, out_h, out_w). A transposed
/// convolution runs the same geometry in reverse.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t channels_in = 1;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t channels_out = 1;
  ConvSpec spec{};

  std::size_t out_h() const { return (in_h + 2 * spec.padding - spec.kernel) / spec.stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * spec.padding - spec.kernel) / spec.stride + 1; }
  std::size_t patch() const { return channels_in * spec.kernel * spec.kernel; }
  std::size_t in_size() const { return batch * channels_in * in_h * in_w; }
  std::size_t out_size() const { return batch * channels_out * out_h() * out_w(); }
  std::size_t weight_size() const { return channels_out * patch(); }
};

/// Spatial size produced by a transposed convolution of `in` pixels.
std::size_t transposed_out(std::size_t in, const ConvSpec& spec);

namespace kernels {

// y = conv(x, w) + b. w is [channels_out, channels_in, k, k]; b may be empty.
void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
// dx = conv^T(dy, w). Overwrites dx.
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
// dw = dy (x) x, db = sum dy. Overwrites dw and db (db may be empty).
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db);

// y[n, g] = sum_f x[n, f] w[f, g] + b[g]
void dense_forward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b, std::span<double> y);
void dense_backward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db);

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db);
void dense_forward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b, std::span<double> y);
void dense_backward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db);

}  // namespace reference
}  // namespace kernels
}  // namespace thermocae
