#include "thermocae/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace thermocae {

std::size_t transposed_out(std::size_t in, const ConvSpec& s) {
  return (in - 1) * s.stride + s.kernel + s.output_padding - 2 * s.padding;
}

namespace kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

// Images per GEMM: enough for roughly 2048 output columns, which keeps the
// deep layers (few pixels per image) efficient without huge buffers.
std::size_t chunk_images(const ConvGeometry& g) {
  const std::size_t p = std::max<std::size_t>(g.out_h() * g.out_w(), 1);
  return std::clamp<std::size_t>((2048 + p - 1) / p, 1, g.batch);
}

// Grow-only scratch space, one per slot and thread, reused across calls.
double* scratch(int slot, std::size_t n) {
  thread_local std::vector<double> buf[3];
  auto& b = buf[slot];
  if (b.size() < n) b.resize(n);
  return b.data();
}

// Range of output columns whose input column ow*s + kw - pad lies in [0, w).
void valid_span(long kw, long pad, long s, long w, long n_out, long& lo, long& hi) {
  lo = std::max<long>(0, (pad - kw + s - 1) / s);
  hi = std::min<long>(n_out, (w - 1 + pad - kw) / s + 1);
  if (hi < lo) hi = lo;
}

// Unfolds one image [C, H, W] into rows of length out_h*out_w placed `ld` apart.
void im2col(const ConvGeometry& g, const double* img, double* col, std::size_t ld) {
  const long k = static_cast<long>(g.spec.kernel), s = static_cast<long>(g.spec.stride);
  const long pad = static_cast<long>(g.spec.padding);
  const long oh_n = static_cast<long>(g.out_h()), ow_n = static_cast<long>(g.out_w());
  const long h = static_cast<long>(g.in_h), w = static_cast<long>(g.in_w);
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    const double* plane = img + c * g.in_h * g.in_w;
    for (long kh = 0; kh < k; ++kh)
      for (long kw = 0; kw < k; ++kw) {
        double* row = col + ((static_cast<long>(c) * k + kh) * k + kw) * static_cast<long>(ld);
        long lo, hi;
        valid_span(kw, pad, s, w, ow_n, lo, hi);
        for (long oh = 0; oh < oh_n; ++oh) {
          const long ih = oh * s + kh - pad;
          double* out = row + oh * ow_n;
          if (ih < 0 || ih >= h) {
            std::fill(out, out + ow_n, 0.0);
            continue;
          }
          const double* src = plane + ih * w + kw - pad;
          std::fill(out, out + lo, 0.0);
          for (long ow = lo; ow < hi; ++ow) out[ow] = src[ow * s];
          std::fill(out + hi, out + ow_n, 0.0);
        }
      }
  }
}

// Adjoint of im2col: scatter-adds columns back into an image (overwrites img).
void col2im(const ConvGeometry& g, const double* col, std::size_t ld, double* img) {
  const long k = static_cast<long>(g.spec.kernel), s = static_cast<long>(g.spec.stride);
  const long pad = static_cast<long>(g.spec.padding);
  const long oh_n = static_cast<long>(g.out_h()), ow_n = static_cast<long>(g.out_w());
  const long h = static_cast<long>(g.in_h), w = static_cast<long>(g.in_w);
  std::fill(img, img + g.channels_in * g.in_h * g.in_w, 0.0);
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    double* plane = img + c * g.in_h * g.in_w;
    for (long kh = 0; kh < k; ++kh)
      for (long kw = 0; kw < k; ++kw) {
        const double* row = col + ((static_cast<long>(c) * k + kh) * k + kw) * static_cast<long>(ld);
        long lo, hi;
        valid_span(kw, pad, s, w, ow_n, lo, hi);
        for (long oh = 0; oh < oh_n; ++oh) {
          const long ih = oh * s + kh - pad;
          if (ih < 0 || ih >= h) continue;
          double* dst = plane + ih * w + kw - pad;
          const double* in = row + oh * ow_n;
          for (long ow = lo; ow < hi; ++ow) dst[ow * s] += in[ow];
        }
      }
  }
}

}  // namespace

// All three convolution kernels work on chunks of images at once: the chunk
// is unfolded into one [patch, chunk*P] column matrix so that each GEMM is
// wide even in the deep layers where P is small.

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const std::size_t K = g.patch(), P = g.out_h() * g.out_w(), Co = g.channels_out;
  const std::size_t in_stride = g.channels_in * g.in_h * g.in_w;
  const std::size_t chunk = chunk_images(g);
  CMapMat wm(w.data(), static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(K));
  double* col = scratch(0, K * chunk * P);
  double* out = scratch(1, Co * chunk * P);
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t nc = std::min(chunk, g.batch - n0), ld = nc * P;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < nc; ++i) im2col(g, x.data() + (n0 + i) * in_stride, col + i * P, ld);
    MapMat(out, static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(ld)).noalias() =
        wm * CMapMat(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(ld));
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t c = 0; c < Co; ++c) {
        const double* src = out + c * ld + i * P;
        double* dst = y.data() + ((n0 + i) * Co + c) * P;
        const double bias = b.empty() ? 0.0 : b[c];
        for (std::size_t p = 0; p < P; ++p) dst[p] = src[p] + bias;
      }
  }
}

namespace {

// dy [N, Co, P] for images n0..n0+nc -> [Co, nc*P].
void gather_dy(std::span<const double> dy, std::size_t n0, std::size_t nc, std::size_t Co, std::size_t P,
               double* out) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t c = 0; c < Co; ++c)
      std::copy_n(dy.data() + ((n0 + i) * Co + c) * P, P, out + c * nc * P + i * P);
}

}  // namespace

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  const std::size_t K = g.patch(), P = g.out_h() * g.out_w(), Co = g.channels_out;
  const std::size_t in_stride = g.channels_in * g.in_h * g.in_w;
  const std::size_t chunk = chunk_images(g);
  CMapMat wm(w.data(), static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(K));
  double* dyc = scratch(0, Co * chunk * P);
  double* col = scratch(1, K * chunk * P);
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t nc = std::min(chunk, g.batch - n0), ld = nc * P;
    gather_dy(dy, n0, nc, Co, P, dyc);
    MapMat(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(ld)).noalias() =
        wm.transpose() * CMapMat(dyc, static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(ld));
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < nc; ++i) col2im(g, col + i * P, ld, dx.data() + (n0 + i) * in_stride);
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db) {
  const std::size_t K = g.patch(), P = g.out_h() * g.out_w(), Co = g.channels_out;
  const std::size_t in_stride = g.channels_in * g.in_h * g.in_w;
  const std::size_t chunk = chunk_images(g);
  MapMat dwm(dw.data(), static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(K));
  dwm.setZero();
  // Chunks are accumulated in a fixed order, so the result does not depend
  // on the thread count.
  double* col = scratch(0, K * chunk * P);
  double* dyc = scratch(1, Co * chunk * P);
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t nc = std::min(chunk, g.batch - n0), ld = nc * P;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < nc; ++i) im2col(g, x.data() + (n0 + i) * in_stride, col + i * P, ld);
    gather_dy(dy, n0, nc, Co, P, dyc);
    dwm.noalias() += CMapMat(dyc, static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(ld)) *
                     CMapMat(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(ld)).transpose();
  }
  if (!db.empty()) {
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t n = 0; n < g.batch; ++n)
      for (std::size_t c = 0; c < Co; ++c) {
        const double* row = dy.data() + (n * Co + c) * P;
        double acc = 0.0;
        for (std::size_t p = 0; p < P; ++p) acc += row[p];
        db[c] += acc;
      }
  }
}

void dense_forward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b, std::span<double> y) {
  const auto N = static_cast<Eigen::Index>(n), F = static_cast<Eigen::Index>(f),
             G = static_cast<Eigen::Index>(g);
  MapMat ym(y.data(), N, G);
  ym.noalias() = CMapMat(x.data(), N, F) * CMapMat(w.data(), F, G);
  if (!b.empty()) ym.rowwise() += CMapVec(b.data(), G).transpose();
}

void dense_backward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db) {
  const auto N = static_cast<Eigen::Index>(n), F = static_cast<Eigen::Index>(f),
             G = static_cast<Eigen::Index>(g);
  CMapMat dym(dy.data(), N, G);
  if (!dx.empty()) MapMat(dx.data(), N, F).noalias() = dym * CMapMat(w.data(), F, G).transpose();
  if (!dw.empty()) MapMat(dw.data(), F, G).noalias() = CMapMat(x.data(), N, F).transpose() * dym;
  if (!db.empty())
    for (Eigen::Index j = 0; j < G; ++j) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) acc += dym(i, j);
      db[j] = acc;
    }
}

}  // namespace kernels
}  // namespace thermocae
