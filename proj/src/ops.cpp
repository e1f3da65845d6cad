#include "thermocae/ops.hpp"

#include <cmath>
#include <string>

namespace thermocae {

namespace {

void require_same_graph(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr) throw std::logic_error("ops: variables from different graphs");
}

void require_same_shape(const char* op, Var a, Var b) {
  require_same_graph(a, b);
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
}

void require_rank(const char* op, const char* what, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + ": " + what + " must be rank " + std::to_string(rank) +
                     ", got " + to_string(t.shape()));
}

void accumulate(Graph& g, std::size_t id, std::span<const double> delta) {
  if (!g.requires_grad(id)) return;
  auto dst = g.grad_buffer(id).data();
  const std::size_t n = dst.size();
#pragma omp parallel for simd if (n > 65536)
  for (std::size_t i = 0; i < n; ++i) dst[i] += delta[i];
}

// Elementwise unary op: value = f(x); backward multiplies by dfdx(x, y).
template <class F, class D>
Var unary(Var x, F f, D dfdx) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  const std::size_t n = xv.size();
  const double* xs = xv.raw();
  double* ys = y.raw();
#pragma omp parallel for simd if (n > 65536)
  for (std::size_t i = 0; i < n; ++i) ys[i] = f(xs[i]);
  return x.graph->record(std::move(y), {x.id}, [dfdx](Graph& g, std::size_t self) {
    const std::size_t in = g.inputs(self)[0];
    const Tensor& xv = g.value(in);
    const Tensor& yv = g.value(self);
    const Tensor& dy = g.grad(self);
    auto dst = g.grad_buffer(in).data();
    const std::size_t n = dst.size();
#pragma omp parallel for simd if (n > 65536)
    for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace

Var conv2d(Var x, Var w, Var b, const ConvSpec& spec) {
  require_same_graph(x, w);
  require_same_graph(x, b);
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  require_rank("conv2d", "input", xv, 4);
  require_rank("conv2d", "weight", wv, 4);
  if (wv.dim(1) != xv.dim(1) || wv.dim(2) != spec.kernel || wv.dim(3) != spec.kernel)
    throw ShapeError("conv2d: weight " + to_string(wv.shape()) + " does not fit input " +
                     to_string(xv.shape()) + " with kernel " + std::to_string(spec.kernel));
  if (bv.size() != wv.dim(0))
    throw ShapeError("conv2d: bias has " + std::to_string(bv.size()) + " values for " +
                     std::to_string(wv.dim(0)) + " output channels");
  if (xv.dim(2) + 2 * spec.padding < spec.kernel || xv.dim(3) + 2 * spec.padding < spec.kernel)
    throw ShapeError("conv2d: input " + to_string(xv.shape()) + " smaller than kernel");
  ConvGeometry geo{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), spec};
  Tensor y({geo.batch, geo.channels_out, geo.out_h(), geo.out_w()});
  kernels::conv2d_forward(geo, xv.data(), wv.data(), bv.data(), y.data());
  return x.graph->record(std::move(y), {x.id, w.id, b.id}, [geo](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    const Tensor& dy = g.grad(self);
    if (g.requires_grad(in[0])) {
      std::vector<double> dx(geo.in_size());
      kernels::conv2d_backward_input(geo, dy.data(), g.value(in[1]).data(), dx);
      accumulate(g, in[0], dx);
    }
    if (g.requires_grad(in[1]) || g.requires_grad(in[2])) {
      std::vector<double> dw(geo.weight_size()), db(geo.channels_out);
      kernels::conv2d_backward_weight(geo, g.value(in[0]).data(), dy.data(), dw, db);
      accumulate(g, in[1], dw);
      accumulate(g, in[2], db);
    }
  });
}

Var conv_transpose2d(Var x, Var w, Var b, const ConvSpec& spec) {
  require_same_graph(x, w);
  require_same_graph(x, b);
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  require_rank("conv_transpose2d", "input", xv, 4);
  require_rank("conv_transpose2d", "weight", wv, 4);
  if (wv.dim(0) != xv.dim(1) || wv.dim(2) != spec.kernel || wv.dim(3) != spec.kernel)
    throw ShapeError("conv_transpose2d: weight " + to_string(wv.shape()) + " does not fit input " +
                     to_string(xv.shape()) + " with kernel " + std::to_string(spec.kernel));
  if (bv.size() != wv.dim(1))
    throw ShapeError("conv_transpose2d: bias has " + std::to_string(bv.size()) + " values for " +
                     std::to_string(wv.dim(1)) + " output channels");
  // Run the matching forward-convolution geometry backwards: the wide side is
  // this op's output.
  ConvGeometry geo{xv.dim(0), wv.dim(1), transposed_out(xv.dim(2), spec),
                   transposed_out(xv.dim(3), spec), wv.dim(0), spec};
  if (geo.out_h() != xv.dim(2) || geo.out_w() != xv.dim(3))
    throw ShapeError("conv_transpose2d: spec does not invert for input " + to_string(xv.shape()));
  Tensor y({geo.batch, geo.channels_in, geo.in_h, geo.in_w});
  kernels::conv2d_backward_input(geo, xv.data(), wv.data(), y.data());
  const std::size_t plane = geo.in_h * geo.in_w;
  for (std::size_t n = 0; n < geo.batch; ++n)
    for (std::size_t c = 0; c < geo.channels_in; ++c) {
      double* p = y.raw() + (n * geo.channels_in + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += bv[c];
    }
  return x.graph->record(std::move(y), {x.id, w.id, b.id}, [geo](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    const Tensor& dy = g.grad(self);
    if (g.requires_grad(in[0])) {
      std::vector<double> dx(geo.out_size());
      kernels::conv2d_forward(geo, dy.data(), g.value(in[1]).data(), {}, dx);
      accumulate(g, in[0], dx);
    }
    if (g.requires_grad(in[1])) {
      std::vector<double> dw(geo.weight_size());
      kernels::conv2d_backward_weight(geo, dy.data(), g.value(in[0]).data(), dw, {});
      accumulate(g, in[1], dw);
    }
    if (g.requires_grad(in[2])) {
      std::vector<double> db(geo.channels_in, 0.0);
      const std::size_t plane = geo.in_h * geo.in_w;
      for (std::size_t n = 0; n < geo.batch; ++n)
        for (std::size_t c = 0; c < geo.channels_in; ++c) {
          const double* p = dy.raw() + (n * geo.channels_in + c) * plane;
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += p[i];
          db[c] += acc;
        }
      accumulate(g, in[2], db);
    }
  });
}

Var dense(Var x, Var w, Var b) {
  require_same_graph(x, w);
  require_same_graph(x, b);
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  require_rank("dense", "input", xv, 2);
  require_rank("dense", "weight", wv, 2);
  if (wv.dim(0) != xv.dim(1))
    throw ShapeError("dense: input " + to_string(xv.shape()) + " vs weight " + to_string(wv.shape()));
  if (bv.size() != wv.dim(1))
    throw ShapeError("dense: bias has " + std::to_string(bv.size()) + " values for " +
                     std::to_string(wv.dim(1)) + " outputs");
  const std::size_t n = xv.dim(0), f = xv.dim(1), gdim = wv.dim(1);
  Tensor y({n, gdim});
  kernels::dense_forward(n, f, gdim, xv.data(), wv.data(), bv.data(), y.data());
  return x.graph->record(std::move(y), {x.id, w.id, b.id}, [n, f, gdim](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    std::vector<double> dx(g.requires_grad(in[0]) ? n * f : 0);
    std::vector<double> dw(g.requires_grad(in[1]) ? f * gdim : 0);
    std::vector<double> db(g.requires_grad(in[2]) ? gdim : 0);
    kernels::dense_backward(n, f, gdim, g.value(in[0]).data(), g.value(in[1]).data(),
                            g.grad(self).data(), dx, dw, db);
    if (!dx.empty()) accumulate(g, in[0], dx);
    if (!dw.empty()) accumulate(g, in[1], dw);
    if (!db.empty()) accumulate(g, in[2], db);
  });
}

Var activation(Var x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return unary(
          x, [](double v) { return v > 0.0 ? v : 0.0; },
          [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::sigmoid:
      return unary(
          x,
          [](double v) {
            // Split by sign so exp never overflows.
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
          },
          [](double, double y) { return y * (1.0 - y); });
  }
  throw std::invalid_argument("activation: unknown kind");
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return x.graph->record(std::move(y), {x.id}, [](Graph& g, std::size_t self) {
    accumulate(g, g.inputs(self)[0], g.grad(self).data());
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return a.graph->record(std::move(y), {a.id, b.id}, [](Graph& g, std::size_t self) {
    accumulate(g, g.inputs(self)[0], g.grad(self).data());
    accumulate(g, g.inputs(self)[1], g.grad(self).data());
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  return a.graph->record(std::move(y), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    accumulate(g, in[0], g.grad(self).data());
    if (g.requires_grad(in[1])) {
      auto dst = g.grad_buffer(in[1]).data();
      const Tensor& dy = g.grad(self);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return a.graph->record(std::move(y), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    const Tensor& dy = g.grad(self);
    const Tensor &av = g.value(in[0]), &bv = g.value(in[1]);
    if (g.requires_grad(in[0])) {
      auto dst = g.grad_buffer(in[0]).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += dy[i] * bv[i];
    }
    if (g.requires_grad(in[1])) {
      auto dst = g.grad_buffer(in[1]).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += dy[i] * av[i];
    }
  });
}

Var div(Var a, Var b) {
  require_same_shape("div", a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] / b.value()[i];
  return a.graph->record(std::move(y), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto& in = g.inputs(self);
    const Tensor& dy = g.grad(self);
    const Tensor &bv = g.value(in[1]), &yv = g.value(self);
    if (g.requires_grad(in[0])) {
      auto dst = g.grad_buffer(in[0]).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += dy[i] / bv[i];
    }
    if (g.requires_grad(in[1])) {
      auto dst = g.grad_buffer(in[1]).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= dy[i] * yv[i] / bv[i];
    }
  });
}

Var add_scalar(Var x, double c) {
  return unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var scale(Var x, double c) {
  return unary(x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Var square(Var x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var clamp_pow(Var x, double p) {
  return unary(
      x, [p](double v) { return v <= 0.0 ? 0.0 : std::pow(v, p); },  // NaN passes through
      [p](double v, double) { return v <= 0.0 ? 0.0 : p * std::pow(v, p - 1.0); });
}

Var separable_filter_valid(Var x, std::span<const double> taps_in) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2) throw ShapeError("separable_filter_valid: need at least 2 axes");
  const std::size_t k = taps_in.size();
  const std::size_t h = xv.dim(xv.rank() - 2), w = xv.dim(xv.rank() - 1);
  if (k == 0 || k > h || k > w)
    throw ShapeError("separable_filter_valid: window " + std::to_string(k) + " exceeds image " +
                     to_string(xv.shape()));
  const std::size_t oh = h - k + 1, ow = w - k + 1, planes = xv.size() / (h * w);
  std::vector<double> taps(taps_in.begin(), taps_in.end());
  Shape out_shape = xv.shape();
  out_shape[out_shape.size() - 2] = oh;
  out_shape[out_shape.size() - 1] = ow;
  Tensor y(out_shape);
#pragma omp parallel
  {
    std::vector<double> tmp(h * ow);
#pragma omp for schedule(static)
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = xv.raw() + p * h * w;
      // Tap loops are outermost so the column loops vectorise.
      std::fill(tmp.begin(), tmp.end(), 0.0);
      for (std::size_t r = 0; r < h; ++r) {
        double* row = tmp.data() + r * ow;
        for (std::size_t t = 0; t < k; ++t) {
          const double* s = src + r * w + t;
          const double a = taps[t];
          for (std::size_t c = 0; c < ow; ++c) row[c] += a * s[c];
        }
      }
      double* dst = y.raw() + p * oh * ow;
      for (std::size_t r = 0; r < oh; ++r) {
        double* row = dst + r * ow;
        for (std::size_t t = 0; t < k; ++t) {
          const double* s = tmp.data() + (r + t) * ow;
          const double a = taps[t];
          for (std::size_t c = 0; c < ow; ++c) row[c] += a * s[c];
        }
      }
    }
  }
  return x.graph->record(std::move(y), {x.id}, [taps, h, w, oh, ow, planes](Graph& g, std::size_t self) {
    const std::size_t in = g.inputs(self)[0];
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad_buffer(in);
    const std::size_t k = taps.size();
#pragma omp parallel
    {
      std::vector<double> tmp(h * ow);
#pragma omp for schedule(static)
      for (std::size_t p = 0; p < planes; ++p) {
        std::fill(tmp.begin(), tmp.end(), 0.0);
        const double* d = dy.raw() + p * oh * ow;
        for (std::size_t r = 0; r < oh; ++r)
          for (std::size_t t = 0; t < k; ++t)
            for (std::size_t c = 0; c < ow; ++c) tmp[(r + t) * ow + c] += taps[t] * d[r * ow + c];
        double* dst = dx.raw() + p * h * w;
        for (std::size_t r = 0; r < h; ++r)
          for (std::size_t t = 0; t < k; ++t) {
            double* row = dst + r * w + t;
            const double* s = tmp.data() + r * ow;
            const double a = taps[t];
            for (std::size_t c = 0; c < ow; ++c) row[c] += a * s[c];
          }
      }
    }
  });
}

Var avg_pool2(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2) throw ShapeError("avg_pool2: need at least 2 axes");
  const std::size_t h = xv.dim(xv.rank() - 2), w = xv.dim(xv.rank() - 1);
  if (h < 2 || w < 2) throw ShapeError("avg_pool2: input " + to_string(xv.shape()) + " too small");
  const std::size_t oh = h / 2, ow = w / 2, planes = xv.size() / (h * w);
  Shape out_shape = xv.shape();
  out_shape[out_shape.size() - 2] = oh;
  out_shape[out_shape.size() - 1] = ow;
  Tensor y(out_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* s = xv.raw() + p * h * w;
    double* d = y.raw() + p * oh * ow;
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c)
        d[r * ow + c] = 0.25 * (s[2 * r * w + 2 * c] + s[2 * r * w + 2 * c + 1] +
                                s[(2 * r + 1) * w + 2 * c] + s[(2 * r + 1) * w + 2 * c + 1]);
  }
  return x.graph->record(std::move(y), {x.id}, [h, w, oh, ow, planes](Graph& g, std::size_t self) {
    const std::size_t in = g.inputs(self)[0];
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad_buffer(in);
    for (std::size_t p = 0; p < planes; ++p) {
      const double* d = dy.raw() + p * oh * ow;
      double* s = dx.raw() + p * h * w;
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
          const double q = 0.25 * d[r * ow + c];
          s[2 * r * w + 2 * c] += q;
          s[2 * r * w + 2 * c + 1] += q;
          s[(2 * r + 1) * w + 2 * c] += q;
          s[(2 * r + 1) * w + 2 * c + 1] += q;
        }
    }
  });
}

Var per_sample_mean(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.dim(0), per = xv.size() / n;
  Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < per; ++j) acc += xv[i * per + j];
    y[i] = acc / static_cast<double>(per);
  }
  return x.graph->record(std::move(y), {x.id}, [n, per](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad_buffer(g.inputs(self)[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const double q = dy[i] / static_cast<double>(per);
      for (std::size_t j = 0; j < per; ++j) dx[i * per + j] += q;
    }
  });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double acc = 0.0;
  for (double v : xv.data()) acc += v;
  return x.graph->record(Tensor({1}, acc), {x.id}, [](Graph& g, std::size_t self) {
    const double d = g.grad(self)[0];
    for (double& v : g.grad_buffer(g.inputs(self)[0]).data()) v += d;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

}  // namespace thermocae
