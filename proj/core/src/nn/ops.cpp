// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "utg/nn/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "utg/nn/linalg.hpp"

namespace utg::nn {
namespace {

template <class T>
void require_same_shape(const Graph<T>& g, Var a, Var b, const char* op) {
  if (g.value(a).shape() != g.value(b).shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(g.value(a).shape()) +
                     " vs " + shape_string(g.value(b).shape()));
  }
}

template <class T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Unary elementwise op whose derivative is a function of (input, output).
template <class T, class Fwd, class Deriv>
Var unary(Graph<T>& g, Var a, Fwd fwd, Deriv deriv) {
  const auto& x = g.value(a);
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return g.record(std::move(y), {a}, [a, deriv](Graph<T>& gr, std::size_t self) {
    if (!gr.requires_grad(a)) return;
    const auto& x = gr.value(a);
    const auto& y = gr.value(self);
    const auto& gy = gr.grad_mut(self);
    auto& gx = gr.grad_mut(a);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * deriv(x[i], y[i]);
  });
}

struct ConvGeometry {
  std::size_t n, cin, h, w;      // input
  std::size_t cout, ho, wo;      // output
  std::size_t kh, kw, stride, pad;
  std::vector<std::size_t> taps;  // visible tap indices into kh*kw

  std::size_t rows() const { return cin * taps.size(); }
  std::size_t cols() const { return n * ho * wo; }
};

std::vector<std::size_t> visible_taps(std::size_t kh, std::size_t kw,
                                      const std::vector<std::uint8_t>& mask) {
  if (!mask.empty() && mask.size() != kh * kw) {
    throw ShapeError("tap mask has " + std::to_string(mask.size()) + " entries for a " +
                     std::to_string(kh) + "x" + std::to_string(kw) + " kernel");
  }
  std::vector<std::size_t> taps;
  for (std::size_t t = 0; t < kh * kw; ++t) {
    if (mask.empty() || mask[t]) taps.push_back(t);
  }
  return taps;
}

// col[(ci*T + t), (img*ho*wo + oy*wo + ox)] = x[img, ci, oy*s - p + ky, ox*s - p + kx]
template <class T>
void im2col(const ConvGeometry& geo, const T* x, T* col) {
  const std::size_t hw_out = geo.ho * geo.wo;
  const std::size_t ncols = geo.cols();
  const auto ntaps = geo.taps.size();
  for (std::size_t ci = 0; ci < geo.cin; ++ci) {
    for (std::size_t ti = 0; ti < ntaps; ++ti) {
      const std::size_t ky = geo.taps[ti] / geo.kw;
      const std::size_t kx = geo.taps[ti] % geo.kw;
      T* row = col + (ci * ntaps + ti) * ncols;
      for (std::size_t img = 0; img < geo.n; ++img) {
        const T* plane = x + (img * geo.cin + ci) * geo.h * geo.w;
        T* dst = row + img * hw_out;
        for (std::size_t oy = 0; oy < geo.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                          static_cast<std::ptrdiff_t>(geo.pad);
          for (std::size_t ox = 0; ox < geo.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                            static_cast<std::ptrdiff_t>(geo.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(geo.h) &&
                                ix < static_cast<std::ptrdiff_t>(geo.w);
            dst[oy * geo.wo + ox] = inside ? plane[iy * geo.w + ix] : T{0};
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the image.
template <class T>
void col2im(const ConvGeometry& geo, const T* col, T* x) {
  const std::size_t hw_out = geo.ho * geo.wo;
  const std::size_t ncols = geo.cols();
  const auto ntaps = geo.taps.size();
  for (std::size_t ci = 0; ci < geo.cin; ++ci) {
    for (std::size_t ti = 0; ti < ntaps; ++ti) {
      const std::size_t ky = geo.taps[ti] / geo.kw;
      const std::size_t kx = geo.taps[ti] % geo.kw;
      const T* row = col + (ci * ntaps + ti) * ncols;
      for (std::size_t img = 0; img < geo.n; ++img) {
        T* plane = x + (img * geo.cin + ci) * geo.h * geo.w;
        const T* src = row + img * hw_out;
        for (std::size_t oy = 0; oy < geo.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                          static_cast<std::ptrdiff_t>(geo.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) continue;
          for (std::size_t ox = 0; ox < geo.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                            static_cast<std::ptrdiff_t>(geo.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) continue;
            plane[iy * geo.w + ix] += src[oy * geo.wo + ox];
          }
        }
      }
    }
  }
}

// Weight [outer, inner, kh, kw] restricted to visible taps -> [outer, inner*T].
template <class T>
std::vector<T> gather_taps(const Tensor<T>& w, const std::vector<std::size_t>& taps) {
  const std::size_t outer = w.dim(0), inner = w.dim(1), k = w.dim(2) * w.dim(3);
  std::vector<T> out(outer * inner * taps.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t t = 0; t < taps.size(); ++t) {
        out[(o * inner + i) * taps.size() + t] = w[(o * inner + i) * k + taps[t]];
      }
    }
  }
  return out;
}

template <class T>
void scatter_taps(const std::vector<T>& packed, const std::vector<std::size_t>& taps,
                  Tensor<T>& w) {
  const std::size_t outer = w.dim(0), inner = w.dim(1), k = w.dim(2) * w.dim(3);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t t = 0; t < taps.size(); ++t) {
        w[(o * inner + i) * k + taps[t]] += packed[(o * inner + i) * taps.size() + t];
      }
    }
  }
}

// [N, C, HW] <-> [C, N*HW]
template <class T>
void nchw_to_cm(std::size_t n, std::size_t c, std::size_t hw, const T* src, T* dst) {
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(src + (img * c + ch) * hw, hw, dst + ch * n * hw + img * hw);
}

template <class T>
void cm_to_nchw(std::size_t n, std::size_t c, std::size_t hw, const T* src, T* dst) {
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(src + ch * n * hw + img * hw, hw, dst + (img * c + ch) * hw);
}

template <class T>
void check_conv_params(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                       std::size_t w_in_axis, std::size_t w_out_axis, const char* op) {
  if (x.rank() != 4 || w.rank() != 4 || b.rank() != 1) {
    throw ShapeError(std::string(op) + ": expected x rank 4, w rank 4, b rank 1");
  }
  if (w.dim(w_in_axis) != x.dim(1)) {
    throw ShapeError(std::string(op) + ": input channels " + std::to_string(x.dim(1)) +
                     " do not match weight " + shape_string(w.shape()));
  }
  if (b.dim(0) != w.dim(w_out_axis)) {
    throw ShapeError(std::string(op) + ": bias " + shape_string(b.shape()) +
                     " does not match weight " + shape_string(w.shape()));
  }
}

}  // namespace

std::vector<std::uint8_t> causal_mask(std::size_t kh, std::size_t kw, MaskType type) {
  std::vector<std::uint8_t> mask(kh * kw, 0);
  const std::size_t cy = kh / 2, cx = kw / 2;
  for (std::size_t r = 0; r < kh; ++r) {
    for (std::size_t c = 0; c < kw; ++c) {
      const bool before = r < cy || (r == cy && c < cx);
      const bool centre = r == cy && c == cx;
      mask[r * kw + c] = (before || (centre && type == MaskType::kB)) ? 1 : 0;
    }
  }
  return mask;
}

template <class T>
Var add(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "add");
  Tensor<T> y = g.value(a);
  const auto& bv = g.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return g.record(std::move(y), {a, b}, [a, b](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    if (gr.requires_grad(a)) accumulate(gr.grad_mut(a), gy);
    if (gr.requires_grad(b)) accumulate(gr.grad_mut(b), gy);
  });
}

template <class T>
Var sub(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "sub");
  Tensor<T> y = g.value(a);
  const auto& bv = g.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return g.record(std::move(y), {a, b}, [a, b](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    if (gr.requires_grad(a)) accumulate(gr.grad_mut(a), gy);
    if (gr.requires_grad(b)) {
      auto& gb = gr.grad_mut(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
    }
  });
}

template <class T>
Var mul(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "mul");
  Tensor<T> y = g.value(a);
  const auto& bv = g.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return g.record(std::move(y), {a, b}, [a, b](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    if (gr.requires_grad(a)) {
      auto& ga = gr.grad_mut(a);
      const auto& bv = gr.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (gr.requires_grad(b)) {
      auto& gb = gr.grad_mut(b);
      const auto& av = gr.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

template <class T>
Var scale(Graph<T>& g, Var a, T factor) {
  return unary(
      g, a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <class T>
Var add_scalar(Graph<T>& g, Var a, T offset) {
  return unary(
      g, a, [offset](T x) { return x + offset; }, [](T, T) { return T{1}; });
}

template <class T>
Var square(Graph<T>& g, Var a) {
  return unary(
      g, a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <class T>
Var exp(Graph<T>& g, Var a) {
  return unary(
      g, a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
Var relu(Graph<T>& g, Var a) {
  return unary(
      g, a, [](T x) { return x > T{0} ? x : T{0}; },
      [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <class T>
Var sigmoid(Graph<T>& g, Var a) {
  return unary(
      g, a,
      [](T x) {
        // Split by sign so exp never overflows.
        if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var tanh(Graph<T>& g, Var a) {
  return unary(
      g, a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var sum(Graph<T>& g, Var a) {
  const auto& x = g.value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]);
  return g.record(Tensor<T>::scalar(static_cast<T>(acc)), {a},
                  [a](Graph<T>& gr, std::size_t self) {
                    const T gy = gr.grad_mut(self)[0];
                    auto& ga = gr.grad_mut(a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy;
                  });
}

template <class T>
Var mean(Graph<T>& g, Var a) {
  const auto& x = g.value(a);
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]);
  const double inv = 1.0 / static_cast<double>(x.size());
  return g.record(Tensor<T>::scalar(static_cast<T>(acc * inv)), {a},
                  [a, inv](Graph<T>& gr, std::size_t self) {
                    const T gy = gr.grad_mut(self)[0] * static_cast<T>(inv);
                    auto& ga = gr.grad_mut(a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy;
                  });
}

template <class T>
Var reshape(Graph<T>& g, Var a, Shape shape) {
  Tensor<T> y = g.value(a).reshaped(std::move(shape));
  return g.record(std::move(y), {a}, [a](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    auto& ga = gr.grad_mut(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
  });
}

template <class T>
Var stop_gradient(Graph<T>& g, Var a) {
  return g.constant(g.value(a));
}

template <class T>
Var dense(Graph<T>& g, Var x, Var w, Var b) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  const auto& bv = g.value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.dim(1) != wv.dim(0) ||
      bv.dim(0) != wv.dim(1)) {
    throw ShapeError("dense: incompatible shapes x" + shape_string(xv.shape()) + " W" +
                     shape_string(wv.shape()) + " b" + shape_string(bv.shape()));
  }
  const std::size_t n = xv.dim(0), in = wv.dim(0), out = wv.dim(1);
  Tensor<T> y({n, out});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(bv.raw(), out, y.raw() + r * out);
  linalg::gemm(n, in, out, xv.raw(), wv.raw(), y.raw(), true);
  return g.record(std::move(y), {x, w, b}, [x, w, b, n, in, out](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    if (gr.requires_grad(w)) {
      std::vector<T> xt(in * n);
      linalg::transpose(n, in, gr.value(x).raw(), xt.data());
      linalg::gemm(in, n, out, xt.data(), gy.raw(), gr.grad_mut(w).raw(), true);
    }
    if (gr.requires_grad(b)) {
      auto& gb = gr.grad_mut(b);
      for (std::size_t c = 0; c < out; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += static_cast<double>(gy[r * out + c]);
        gb[c] += static_cast<T>(acc);
      }
    }
    if (gr.requires_grad(x)) {
      std::vector<T> wt(out * in);
      linalg::transpose(in, out, gr.value(w).raw(), wt.data());
      linalg::gemm(n, out, in, gy.raw(), wt.data(), gr.grad_mut(x).raw(), true);
    }
  });
}

template <class T>
Var conv2d(Graph<T>& g, Var x, Var w, Var b, const ConvSpec& spec) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  check_conv_params(xv, wv, g.value(b), 1, 0, "conv2d");
  if (spec.stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeometry geo{};
  geo.n = xv.dim(0);
  geo.cin = xv.dim(1);
  geo.h = xv.dim(2);
  geo.w = xv.dim(3);
  geo.cout = wv.dim(0);
  geo.kh = wv.dim(2);
  geo.kw = wv.dim(3);
  geo.stride = spec.stride;
  geo.pad = spec.padding;
  if (geo.h + 2 * geo.pad < geo.kh || geo.w + 2 * geo.pad < geo.kw) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  geo.ho = (geo.h + 2 * geo.pad - geo.kh) / geo.stride + 1;
  geo.wo = (geo.w + 2 * geo.pad - geo.kw) / geo.stride + 1;
  geo.taps = visible_taps(geo.kh, geo.kw, spec.tap_mask);

  const std::size_t hw = geo.ho * geo.wo;
  std::vector<T> col(geo.rows() * geo.cols());
  im2col(geo, xv.raw(), col.data());
  const auto wp = gather_taps(wv, geo.taps);
  std::vector<T> ycm(geo.cout * geo.cols());
  const auto& bv = g.value(b);
  for (std::size_t c = 0; c < geo.cout; ++c)
    std::fill_n(ycm.begin() + c * geo.cols(), geo.cols(), bv[c]);
  linalg::gemm(geo.cout, geo.rows(), geo.cols(), wp.data(), col.data(), ycm.data(), true);
  Tensor<T> y({geo.n, geo.cout, geo.ho, geo.wo});
  cm_to_nchw(geo.n, geo.cout, hw, ycm.data(), y.raw());

  return g.record(std::move(y), {x, w, b},
                  [x, w, b, geo, col = std::move(col)](Graph<T>& gr, std::size_t self) {
                    const std::size_t hw = geo.ho * geo.wo;
                    std::vector<T> gcm(geo.cout * geo.cols());
                    nchw_to_cm(geo.n, geo.cout, hw, gr.grad_mut(self).raw(), gcm.data());
                    if (gr.requires_grad(b)) {
                      auto& gb = gr.grad_mut(b);
                      for (std::size_t c = 0; c < geo.cout; ++c) {
                        double acc = 0.0;
                        const T* row = gcm.data() + c * geo.cols();
                        for (std::size_t j = 0; j < geo.cols(); ++j) acc += static_cast<double>(row[j]);
                        gb[c] += static_cast<T>(acc);
                      }
                    }
                    if (gr.requires_grad(w)) {
                      std::vector<T> colt(geo.cols() * geo.rows());
                      linalg::transpose(geo.rows(), geo.cols(), col.data(), colt.data());
                      std::vector<T> gwp(geo.cout * geo.rows());
                      linalg::gemm(geo.cout, geo.cols(), geo.rows(), gcm.data(), colt.data(),
                                   gwp.data(), false);
                      scatter_taps(gwp, geo.taps, gr.grad_mut(w));
                    }
                    if (gr.requires_grad(x)) {
                      const auto wp = gather_taps(gr.value(w), geo.taps);
                      std::vector<T> wpt(geo.rows() * geo.cout);
                      linalg::transpose(geo.cout, geo.rows(), wp.data(), wpt.data());
                      std::vector<T> gcol(geo.rows() * geo.cols());
                      linalg::gemm(geo.rows(), geo.cout, geo.cols(), wpt.data(), gcm.data(),
                                   gcol.data(), false);
                      col2im(geo, gcol.data(), gr.grad_mut(x).raw());
                    }
                  });
}

template <class T>
Var conv_transpose2d(Graph<T>& g, Var x, Var w, Var b, const ConvSpec& spec) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  check_conv_params(xv, wv, g.value(b), 0, 1, "conv_transpose2d");
  if (spec.stride == 0) throw ShapeError("conv_transpose2d: stride must be positive");
  const std::size_t kh = wv.dim(2), kw = wv.dim(3);
  const std::size_t full_h = (xv.dim(2) - 1) * spec.stride + kh;
  const std::size_t full_w = (xv.dim(3) - 1) * spec.stride + kw;
  if (full_h <= 2 * spec.padding || full_w <= 2 * spec.padding) {
    throw ShapeError("conv_transpose2d: padding removes the whole output");
  }
  // Geometry of the forward convolution this op is the adjoint of: it maps
  // the [N, Cout, Ho, Wo] output back to the [N, Cin, H, W] input.
  ConvGeometry geo{};
  geo.n = xv.dim(0);
  geo.cin = wv.dim(1);
  geo.h = full_h - 2 * spec.padding;
  geo.w = full_w - 2 * spec.padding;
  geo.cout = wv.dim(0);
  geo.ho = xv.dim(2);
  geo.wo = xv.dim(3);
  geo.kh = kh;
  geo.kw = kw;
  geo.stride = spec.stride;
  geo.pad = spec.padding;
  geo.taps = visible_taps(kh, kw, spec.tap_mask);

  const std::size_t hw_in = geo.ho * geo.wo;
  std::vector<T> xcm(geo.cout * geo.cols());
  nchw_to_cm(geo.n, geo.cout, hw_in, xv.raw(), xcm.data());
  const auto wp = gather_taps(wv, geo.taps);  // [Cin_x, Cout*T]
  std::vector<T> wpt(geo.rows() * geo.cout);
  linalg::transpose(geo.cout, geo.rows(), wp.data(), wpt.data());
  std::vector<T> col(geo.rows() * geo.cols());
  linalg::gemm(geo.rows(), geo.cout, geo.cols(), wpt.data(), xcm.data(), col.data(), false);
  Tensor<T> y({geo.n, geo.cin, geo.h, geo.w});
  col2im(geo, col.data(), y.raw());
  const auto& bv = g.value(b);
  const std::size_t hw_out = geo.h * geo.w;
  for (std::size_t img = 0; img < geo.n; ++img)
    for (std::size_t c = 0; c < geo.cin; ++c) {
      T* plane = y.raw() + (img * geo.cin + c) * hw_out;
      for (std::size_t i = 0; i < hw_out; ++i) plane[i] += bv[c];
    }

  return g.record(std::move(y), {x, w, b},
                  [x, w, b, geo, xcm = std::move(xcm)](Graph<T>& gr, std::size_t self) {
                    const auto& gy = gr.grad_mut(self);
                    const std::size_t hw_out = geo.h * geo.w;
                    if (gr.requires_grad(b)) {
                      auto& gb = gr.grad_mut(b);
                      for (std::size_t c = 0; c < geo.cin; ++c) {
                        double acc = 0.0;
                        for (std::size_t img = 0; img < geo.n; ++img) {
                          const T* plane = gy.raw() + (img * geo.cin + c) * hw_out;
                          for (std::size_t i = 0; i < hw_out; ++i) acc += static_cast<double>(plane[i]);
                        }
                        gb[c] += static_cast<T>(acc);
                      }
                    }
                    if (!gr.requires_grad(w) && !gr.requires_grad(x)) return;
                    std::vector<T> gcol(geo.rows() * geo.cols());
                    im2col(geo, gy.raw(), gcol.data());
                    if (gr.requires_grad(w)) {
                      std::vector<T> gcolt(geo.cols() * geo.rows());
                      linalg::transpose(geo.rows(), geo.cols(), gcol.data(), gcolt.data());
                      std::vector<T> gwp(geo.cout * geo.rows());
                      linalg::gemm(geo.cout, geo.cols(), geo.rows(), xcm.data(), gcolt.data(),
                                   gwp.data(), false);
                      scatter_taps(gwp, geo.taps, gr.grad_mut(w));
                    }
                    if (gr.requires_grad(x)) {
                      const auto wp = gather_taps(gr.value(w), geo.taps);
                      std::vector<T> gxcm(geo.cout * geo.cols());
                      linalg::gemm(geo.cout, geo.rows(), geo.cols(), wp.data(), gcol.data(),
                                   gxcm.data(), false);
                      auto& gx = gr.grad_mut(x);
                      std::vector<T> tmp(gx.size());
                      cm_to_nchw(geo.n, geo.cout, geo.ho * geo.wo, gxcm.data(), tmp.data());
                      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += tmp[i];
                    }
                  });
}

template <class T>
Var channels_to_rows(Graph<T>& g, Var x) {
  const auto& xv = g.value(x);
  if (xv.rank() != 4) throw ShapeError("channels_to_rows: expected rank-4 input");
  const std::size_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor<T> y({n * hw, c});
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) y[(img * hw + p) * c + ch] = xv[(img * c + ch) * hw + p];
  return g.record(std::move(y), {x}, [x, n, c, hw](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    auto& gx = gr.grad_mut(x);
    for (std::size_t img = 0; img < n; ++img)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t p = 0; p < hw; ++p) gx[(img * c + ch) * hw + p] += gy[(img * hw + p) * c + ch];
  });
}

template <class T>
Var rows_to_channels(Graph<T>& g, Var rows, std::size_t n, std::size_t h, std::size_t w) {
  const auto& rv = g.value(rows);
  const std::size_t hw = h * w;
  if (rv.rank() != 2 || rv.dim(0) != n * hw) {
    throw ShapeError("rows_to_channels: " + shape_string(rv.shape()) + " is not [" +
                     std::to_string(n * hw) + ", C]");
  }
  const std::size_t c = rv.dim(1);
  Tensor<T> y({n, c, h, w});
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) y[(img * c + ch) * hw + p] = rv[(img * hw + p) * c + ch];
  return g.record(std::move(y), {rows}, [rows, n, c, hw](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    auto& gx = gr.grad_mut(rows);
    for (std::size_t img = 0; img < n; ++img)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t p = 0; p < hw; ++p) gx[(img * hw + p) * c + ch] += gy[(img * c + ch) * hw + p];
  });
}

template <class T>
Var gather_rows(Graph<T>& g, Var table, std::span<const std::int32_t> indices) {
  const auto& tv = g.value(table);
  if (tv.rank() != 2) throw ShapeError("gather_rows: table must be rank 2");
  const std::size_t v = tv.dim(0), k = tv.dim(1);
  Tensor<T> y({indices.size(), k});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto idx = indices[r];
    if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) + " outside [0, " +
                              std::to_string(v) + ")");
    }
    std::copy_n(tv.raw() + static_cast<std::size_t>(idx) * k, k, y.raw() + r * k);
  }
  std::vector<std::int32_t> idx(indices.begin(), indices.end());
  return g.record(std::move(y), {table}, [table, k, idx = std::move(idx)](Graph<T>& gr, std::size_t self) {
    const auto& gy = gr.grad_mut(self);
    auto& gt = gr.grad_mut(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      T* dst = gt.raw() + static_cast<std::size_t>(idx[r]) * k;
      for (std::size_t j = 0; j < k; ++j) dst[j] += gy[r * k + j];
    }
  });
}

template <class T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const std::int32_t> targets) {
  const auto& lv = g.value(logits);
  if (lv.rank() != 2 && lv.rank() != 4) throw ShapeError("softmax_cross_entropy: rank 2 or 4 expected");
  const std::size_t n = lv.dim(0), v = lv.dim(1);
  const std::size_t hw = lv.rank() == 4 ? lv.dim(2) * lv.dim(3) : 1;
  if (targets.size() != n * hw) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n * hw) + " positions");
  }
  // probs laid out like logits; kept for the backward pass.
  std::vector<double> probs(lv.size());
  double nll = 0.0;
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t p = 0; p < hw; ++p) {
      const auto at = [&](std::size_t c) { return (img * v + c) * hw + p; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < v; ++c) mx = std::max(mx, static_cast<double>(lv[at(c)]));
      double z = 0.0;
      for (std::size_t c = 0; c < v; ++c) z += std::exp(static_cast<double>(lv[at(c)]) - mx);
      const double log_z = mx + std::log(z);
      for (std::size_t c = 0; c < v; ++c) probs[at(c)] = std::exp(static_cast<double>(lv[at(c)]) - log_z);
      const auto t = targets[img * hw + p];
      if (t < 0 || static_cast<std::size_t>(t) >= v) {
        throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(t) +
                                " outside [0, " + std::to_string(v) + ")");
      }
      nll += log_z - static_cast<double>(lv[at(static_cast<std::size_t>(t))]);
    }
  }
  const double count = static_cast<double>(n * hw);
  std::vector<std::int32_t> tg(targets.begin(), targets.end());
  return g.record(Tensor<T>::scalar(static_cast<T>(nll / count)), {logits},
                  [logits, n, v, hw, count, probs = std::move(probs), tg = std::move(tg)](
                      Graph<T>& gr, std::size_t self) {
                    const double gy = static_cast<double>(gr.grad_mut(self)[0]) / count;
                    auto& gl = gr.grad_mut(logits);
                    for (std::size_t img = 0; img < n; ++img) {
                      for (std::size_t p = 0; p < hw; ++p) {
                        const auto t = static_cast<std::size_t>(tg[img * hw + p]);
                        for (std::size_t c = 0; c < v; ++c) {
                          const std::size_t i = (img * v + c) * hw + p;
                          const double target = c == t ? 1.0 : 0.0;
                          gl[i] += static_cast<T>(gy * (probs[i] - target));
                        }
                      }
                    }
                  });
}

#define UTG_INSTANTIATE_OPS(T)                                                              \
  template Var add<T>(Graph<T>&, Var, Var);                                                 \
  template Var sub<T>(Graph<T>&, Var, Var);                                                 \
  template Var mul<T>(Graph<T>&, Var, Var);                                                 \
  template Var scale<T>(Graph<T>&, Var, T);                                                 \
  template Var add_scalar<T>(Graph<T>&, Var, T);                                            \
  template Var square<T>(Graph<T>&, Var);                                                   \
  template Var exp<T>(Graph<T>&, Var);                                                      \
  template Var relu<T>(Graph<T>&, Var);                                                     \
  template Var sigmoid<T>(Graph<T>&, Var);                                                  \
  template Var tanh<T>(Graph<T>&, Var);                                                     \
  template Var sum<T>(Graph<T>&, Var);                                                      \
  template Var mean<T>(Graph<T>&, Var);                                                     \
  template Var reshape<T>(Graph<T>&, Var, Shape);                                           \
  template Var stop_gradient<T>(Graph<T>&, Var);                                            \
  template Var dense<T>(Graph<T>&, Var, Var, Var);                                          \
  template Var conv2d<T>(Graph<T>&, Var, Var, Var, const ConvSpec&);                        \
  template Var conv_transpose2d<T>(Graph<T>&, Var, Var, Var, const ConvSpec&);              \
  template Var channels_to_rows<T>(Graph<T>&, Var);                                         \
  template Var rows_to_channels<T>(Graph<T>&, Var, std::size_t, std::size_t, std::size_t);  \
  template Var gather_rows<T>(Graph<T>&, Var, std::span<const std::int32_t>);               \
  template Var softmax_cross_entropy<T>(Graph<T>&, Var, std::span<const std::int32_t>);

UTG_INSTANTIATE_OPS(float)
UTG_INSTANTIATE_OPS(double)

#undef UTG_INSTANTIATE_OPS

}  // namespace utg::nn
