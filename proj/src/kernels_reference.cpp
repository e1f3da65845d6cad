#include "thermocae/kernels.hpp"

#include <algorithm>

namespace thermocae::kernels::reference {

namespace {

// Input coordinate hit by output position `o` and kernel tap `k`, or -1.
long tap(std::size_t o, std::size_t k, const ConvSpec& s, std::size_t extent) {
  const long pos = static_cast<long>(o * s.stride + k) - static_cast<long>(s.padding);
  return (pos >= 0 && pos < static_cast<long>(extent)) ? pos : -1;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const std::size_t k = g.spec.kernel, oh_n = g.out_h(), ow_n = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.channels_out; ++co)
      for (std::size_t oh = 0; oh < oh_n; ++oh)
        for (std::size_t ow = 0; ow < ow_n; ++ow) {
          double acc = b.empty() ? 0.0 : b[co];
          for (std::size_t ci = 0; ci < g.channels_in; ++ci)
            for (std::size_t kh = 0; kh < k; ++kh) {
              const long ih = tap(oh, kh, g.spec, g.in_h);
              if (ih < 0) continue;
              for (std::size_t kw = 0; kw < k; ++kw) {
                const long iw = tap(ow, kw, g.spec, g.in_w);
                if (iw < 0) continue;
                acc += x[((n * g.channels_in + ci) * g.in_h + ih) * g.in_w + iw] *
                       w[((co * g.channels_in + ci) * k + kh) * k + kw];
              }
            }
          y[((n * g.channels_out + co) * oh_n + oh) * ow_n + ow] = acc;
        }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  const std::size_t k = g.spec.kernel, oh_n = g.out_h(), ow_n = g.out_w();
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.channels_out; ++co)
      for (std::size_t oh = 0; oh < oh_n; ++oh)
        for (std::size_t ow = 0; ow < ow_n; ++ow) {
          const double d = dy[((n * g.channels_out + co) * oh_n + oh) * ow_n + ow];
          for (std::size_t ci = 0; ci < g.channels_in; ++ci)
            for (std::size_t kh = 0; kh < k; ++kh) {
              const long ih = tap(oh, kh, g.spec, g.in_h);
              if (ih < 0) continue;
              for (std::size_t kw = 0; kw < k; ++kw) {
                const long iw = tap(ow, kw, g.spec, g.in_w);
                if (iw < 0) continue;
                dx[((n * g.channels_in + ci) * g.in_h + ih) * g.in_w + iw] +=
                    d * w[((co * g.channels_in + ci) * k + kh) * k + kw];
              }
            }
        }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db) {
  const std::size_t k = g.spec.kernel, oh_n = g.out_h(), ow_n = g.out_w();
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(db.begin(), db.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.channels_out; ++co)
      for (std::size_t oh = 0; oh < oh_n; ++oh)
        for (std::size_t ow = 0; ow < ow_n; ++ow) {
          const double d = dy[((n * g.channels_out + co) * oh_n + oh) * ow_n + ow];
          if (!db.empty()) db[co] += d;
          for (std::size_t ci = 0; ci < g.channels_in; ++ci)
            for (std::size_t kh = 0; kh < k; ++kh) {
              const long ih = tap(oh, kh, g.spec, g.in_h);
              if (ih < 0) continue;
              for (std::size_t kw = 0; kw < k; ++kw) {
                const long iw = tap(ow, kw, g.spec, g.in_w);
                if (iw < 0) continue;
                dw[((co * g.channels_in + ci) * k + kh) * k + kw] +=
                    d * x[((n * g.channels_in + ci) * g.in_h + ih) * g.in_w + iw];
              }
            }
        }
}

void dense_forward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b, std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      double acc = b.empty() ? 0.0 : b[j];
      for (std::size_t p = 0; p < f; ++p) acc += x[i * f + p] * w[p * g + j];
      y[i * g + j] = acc;
    }
}

void dense_backward(std::size_t n, std::size_t f, std::size_t g, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy, std::span<double> dx,
                    std::span<double> dw, std::span<double> db) {
  if (!dx.empty())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < f; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g; ++j) acc += dy[i * g + j] * w[p * g + j];
        dx[i * f + p] = acc;
      }
  if (!dw.empty())
    for (std::size_t p = 0; p < f; ++p)
      for (std::size_t j = 0; j < g; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i * f + p] * dy[i * g + j];
        dw[p * g + j] = acc;
      }
  if (!db.empty())
    for (std::size_t j = 0; j < g; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += dy[i * g + j];
      db[j] = acc;
    }
}

}  // namespace thermocae::kernels::reference
