#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fdan/conv.hpp"
#include "fdan/errors.hpp"
#include "fdan/runtime.hpp"
#include "fdan/tensor.hpp"

// Parallel compute kernels. Every kernel is gather-style: each OpenMP thread
// owns a disjoint slice of the *output*, and per-element accumulation order
// is fixed, so results are bitwise identical for any thread count. The only
// scatter-style routines (max_pool_backward, bilinear backward's inverse
// tables) run serially or gather through precomputed inverse index lists.
//
// A plain serial mirror of the core kernels lives in kernels_ref.hpp; tests
// and the benchmark tool compare the two.

namespace fdan::kernels {

namespace detail {

inline bool use_parallel(std::int64_t work) {
  return runtime::thread_count() > 1 && work >= (1 << 12);
}

template <typename T>
inline T apply_activation(Activation a, T v) {
  switch (a) {
    case Activation::none: return v;
    case Activation::relu: return v > T(0) ? v : T(0);
    case Activation::sigmoid: return T(1) / (T(1) + std::exp(-v));
  }
  return v;
}

// One linear interpolation tap: y = v[lo] + frac * (v[hi] - v[lo]).
// frac == 0 reproduces v[lo] bitwise, which makes same-size resize exact.
template <typename T>
struct LerpTap {
  int lo = 0;
  int hi = 0;
  T frac = 0;
};

template <typename T>
inline std::vector<LerpTap<T>> lerp_taps(int in, int out) {
  std::vector<LerpTap<T>> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::floor(src));
    LerpTap<T>& t = taps[static_cast<std::size_t>(o)];
    if (lo < 0) {
      t = {0, 0, T(0)};
    } else if (lo >= in - 1) {
      t = {in - 1, in - 1, T(0)};
    } else {
      t = {lo, lo + 1, static_cast<T>(src - lo)};
    }
  }
  return taps;
}

}  // namespace detail

template <typename T>
bool all_finite(const TensorT<T>& t) {
  const T* p = t.data();
  const std::int64_t n = t.size();
  for (std::int64_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

// y = act(w * x + b). Accumulation order over (ic, kh, kw) matches the
// serial reference exactly.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvSpec& spec,
                  const TensorT<T>& w, const TensorT<T>* bias) {
  const Shape in = x.shape();
  const Shape out = spec.out_shape(in);
  if (w.shape() != spec.weight_shape())
    throw ShapeError("conv2d: weight shape " + to_string(w.shape()) +
                     " does not match spec " + to_string(spec.weight_shape()));
  if (spec.has_bias) {
    if (bias == nullptr || bias->shape() != spec.bias_shape())
      throw ShapeError("conv2d: bias missing or mis-shaped");
  } else if (bias != nullptr) {
    throw ShapeError("conv2d: bias supplied to bias-free layer");
  }
  if (!all_finite(x) || !all_finite(w) || (bias && !all_finite(*bias)))
    throw NumericError("conv2d: non-finite input");

  TensorT<T> y(out);
  const int N = in.n, Ci = in.c, Hi = in.h, Wi = in.w;
  const int Co = out.c, Ho = out.h, Wo = out.w;
  const int K = spec.kernel, S = spec.stride, P = spec.padding;
  const T* xd = x.data();
  const T* wd = w.data();
  const T* bd = bias ? bias->data() : nullptr;
  T* yd = y.data();
  const Activation act = spec.activation;
  const bool par = detail::use_parallel(out.elems() * spec.macs_per_output());

#pragma omp parallel for collapse(3) schedule(static) \
    num_threads(runtime::thread_count()) if (par)
  for (int n = 0; n < N; ++n)
    for (int oc = 0; oc < Co; ++oc)
      for (int oh = 0; oh < Ho; ++oh) {
        const int ih0 = oh * S - P;
        T* yrow = yd + ((static_cast<std::int64_t>(n) * Co + oc) * Ho + oh) * Wo;
        for (int ow = 0; ow < Wo; ++ow) {
          const int iw0 = ow * S - P;
          T acc = bd ? bd[oc] : T(0);
          for (int ic = 0; ic < Ci; ++ic) {
            const T* xch = xd + (static_cast<std::int64_t>(n) * Ci + ic) * Hi * Wi;
            const T* wch = wd + (static_cast<std::int64_t>(oc) * Ci + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
              const int ih = ih0 + kh;
              if (ih < 0 || ih >= Hi) continue;
              const T* xrow = xch + static_cast<std::int64_t>(ih) * Wi;
              const T* wrow = wch + kh * K;
              for (int kw = 0; kw < K; ++kw) {
                const int iw = iw0 + kw;
                if (iw < 0 || iw >= Wi) continue;
                acc += xrow[iw] * wrow[kw];
              }
            }
          }
          yrow[ow] = detail::apply_activation(act, acc);
        }
      }
  return y;
}

// Gradient w.r.t. the conv input, given the gradient w.r.t. the
// pre-activation output. Gathers over contributing output positions.
template <typename T>
TensorT<T> conv2d_grad_input(const TensorT<T>& gz, const ConvSpec& spec,
                             const TensorT<T>& w, const Shape& in_shape) {
  const Shape out = spec.out_shape(in_shape);
  if (gz.shape() != out)
    throw ShapeError("conv2d_grad_input: gradient shape " +
                     to_string(gz.shape()) + " does not match " + to_string(out));
  if (w.shape() != spec.weight_shape())
    throw ShapeError("conv2d_grad_input: bad weight shape");

  TensorT<T> gx(in_shape);
  const int N = in_shape.n, Ci = in_shape.c, Hi = in_shape.h, Wi = in_shape.w;
  const int Co = out.c, Ho = out.h, Wo = out.w;
  const int K = spec.kernel, S = spec.stride, P = spec.padding;
  const T* gd = gz.data();
  const T* wd = w.data();
  T* xd = gx.data();
  const bool par = detail::use_parallel(in_shape.elems() * Co * K * K / Ci);

#pragma omp parallel for collapse(3) schedule(static) \
    num_threads(runtime::thread_count()) if (par)
  for (int n = 0; n < N; ++n)
    for (int ic = 0; ic < Ci; ++ic)
      for (int ih = 0; ih < Hi; ++ih) {
        T* xrow = xd + ((static_cast<std::int64_t>(n) * Ci + ic) * Hi + ih) * Wi;
        for (int iw = 0; iw < Wi; ++iw) {
          T acc = T(0);
          for (int oc = 0; oc < Co; ++oc) {
            const T* gch = gd + (static_cast<std::int64_t>(n) * Co + oc) * Ho * Wo;
            const T* wch = wd + (static_cast<std::int64_t>(oc) * Ci + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
              const int t = ih + P - kh;
              if (t < 0 || t % S != 0) continue;
              const int oh = t / S;
              if (oh >= Ho) continue;
              const T* grow = gch + static_cast<std::int64_t>(oh) * Wo;
              const T* wrow = wch + kh * K;
              for (int kw = 0; kw < K; ++kw) {
                const int u = iw + P - kw;
                if (u < 0 || u % S != 0) continue;
                const int ow = u / S;
                if (ow >= Wo) continue;
                acc += grow[ow] * wrow[kw];
              }
            }
          }
          xrow[iw] = acc;
        }
      }
  return gx;
}

// Gradient w.r.t. the conv weights. Each thread owns one (oc, ic) slice.
template <typename T>
TensorT<T> conv2d_grad_weight(const TensorT<T>& gz, const ConvSpec& spec,
                              const TensorT<T>& x) {
  const Shape in = x.shape();
  const Shape out = spec.out_shape(in);
  if (gz.shape() != out)
    throw ShapeError("conv2d_grad_weight: gradient shape mismatch");

  TensorT<T> gw(spec.weight_shape());
  const int N = in.n, Ci = in.c, Hi = in.h, Wi = in.w;
  const int Co = out.c, Ho = out.h, Wo = out.w;
  const int K = spec.kernel, S = spec.stride, P = spec.padding;
  const T* gd = gz.data();
  const T* xd = x.data();
  T* wd = gw.data();
  const bool par = detail::use_parallel(out.elems() * spec.macs_per_output());

#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(runtime::thread_count()) if (par)
  for (int oc = 0; oc < Co; ++oc)
    for (int ic = 0; ic < Ci; ++ic) {
      T* wch = wd + (static_cast<std::int64_t>(oc) * Ci + ic) * K * K;
      for (int kh = 0; kh < K; ++kh)
        for (int kw = 0; kw < K; ++kw) {
          T acc = T(0);
          for (int n = 0; n < N; ++n) {
            const T* gch = gd + (static_cast<std::int64_t>(n) * Co + oc) * Ho * Wo;
            const T* xch = xd + (static_cast<std::int64_t>(n) * Ci + ic) * Hi * Wi;
            for (int oh = 0; oh < Ho; ++oh) {
              const int ih = oh * S - P + kh;
              if (ih < 0 || ih >= Hi) continue;
              const T* grow = gch + static_cast<std::int64_t>(oh) * Wo;
              const T* xrow = xch + static_cast<std::int64_t>(ih) * Wi;
              for (int ow = 0; ow < Wo; ++ow) {
                const int iw = ow * S - P + kw;
                if (iw < 0 || iw >= Wi) continue;
                acc += grow[ow] * xrow[iw];
              }
            }
          }
          wch[kh * K + kw] = acc;
        }
    }
  return gw;
}

template <typename T>
TensorT<T> conv2d_grad_bias(const TensorT<T>& gz) {
  const Shape s = gz.shape();
  TensorT<T> gb(Shape{1, s.c, 1, 1});
  const T* gd = gz.data();
  T* bd = gb.data();
  const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
#pragma omp parallel for schedule(static) \
    num_threads(runtime::thread_count()) if (detail::use_parallel(s.elems()))
  for (int c = 0; c < s.c; ++c) {
    T acc = T(0);
    for (int n = 0; n < s.n; ++n) {
      const T* p = gd + (static_cast<std::int64_t>(n) * s.c + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
    }
    bd[c] = acc;
  }
  return gb;
}

// Chain rule through a fused activation, given the stored *post*-activation
// output y: relu' = [y > 0], sigmoid' = y (1 - y).
template <typename T>
TensorT<T> activation_backward(Activation act, const TensorT<T>& y,
                               const TensorT<T>& gy) {
  if (y.shape() != gy.shape())
    throw ShapeError("activation_backward: shape mismatch");
  if (act == Activation::none) return gy;
  TensorT<T> gz(y.shape());
  const T* yd = y.data();
  const T* gd = gy.data();
  T* zd = gz.data();
  const std::int64_t n = y.size();
  if (act == Activation::relu) {
    for (std::int64_t i = 0; i < n; ++i) zd[i] = yd[i] > T(0) ? gd[i] : T(0);
  } else {
    for (std::int64_t i = 0; i < n; ++i) zd[i] = gd[i] * yd[i] * (T(1) - yd[i]);
  }
  return gz;
}

template <typename T>
TensorT<T> slice_channels(const TensorT<T>& x, int c0, int c1) {
  const Shape s = x.shape();
  if (c0 < 0 || c1 > s.c || c0 >= c1)
    throw ShapeError("slice_channels: range [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") invalid for " + std::to_string(s.c) +
                     " channels");
  TensorT<T> y(Shape{s.n, c1 - c0, s.h, s.w});
  const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = c0; c < c1; ++c) {
      const T* src = x.data() + (static_cast<std::int64_t>(n) * s.c + c) * plane;
      T* dst = y.data() +
               (static_cast<std::int64_t>(n) * (c1 - c0) + (c - c0)) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i];
    }
  return y;
}

// Accumulates src into dst's channel band starting at c0 (adjoint of slice).
template <typename T>
void add_into_channels(TensorT<T>& dst, const TensorT<T>& src, int c0) {
  const Shape d = dst.shape(), s = src.shape();
  if (s.n != d.n || s.h != d.h || s.w != d.w || c0 < 0 || c0 + s.c > d.c)
    throw ShapeError("add_into_channels: band does not fit");
  const std::int64_t plane = static_cast<std::int64_t>(d.h) * d.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* sp = src.data() + (static_cast<std::int64_t>(n) * s.c + c) * plane;
      T* dp = dst.data() +
              (static_cast<std::int64_t>(n) * d.c + (c0 + c)) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dp[i] += sp[i];
    }
}

template <typename T>
TensorT<T> channel_concat(const std::vector<const TensorT<T>*>& xs) {
  if (xs.empty()) throw ArgumentError("channel_concat: empty input list");
  const Shape first = xs[0]->shape();
  int ctotal = 0;
  for (const auto* x : xs) {
    const Shape s = x->shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w)
      throw ShapeError("channel_concat: spatial/batch mismatch between " +
                       to_string(first) + " and " + to_string(s));
    ctotal += s.c;
  }
  TensorT<T> y(Shape{first.n, ctotal, first.h, first.w});
  const std::int64_t plane = static_cast<std::int64_t>(first.h) * first.w;
  for (int n = 0; n < first.n; ++n) {
    std::int64_t coff = 0;
    for (const auto* x : xs) {
      const int xc = x->shape().c;
      const T* src = x->data() + static_cast<std::int64_t>(n) * xc * plane;
      T* dst = y.data() + (static_cast<std::int64_t>(n) * ctotal + coff) * plane;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(xc) * plane; ++i)
        dst[i] = src[i];
      coff += xc;
    }
  }
  return y;
}

// (N, C*s^2, H, W) -> (N, C, H*s, W*s);
// out[n, c, h*s + i, w*s + j] = in[n, c*s^2 + i*s + j, h, w].
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int s) {
  const Shape in = x.shape();
  if (s <= 0) throw ArgumentError("pixel_shuffle: factor must be positive");
  if (in.c % (s * s) != 0)
    throw ShapeError("pixel_shuffle: " + std::to_string(in.c) +
                     " channels not divisible by " + std::to_string(s * s));
  const Shape out{in.n, in.c / (s * s), in.h * s, in.w * s};
  TensorT<T> y(out);
  const T* xd = x.data();
  T* yd = y.data();
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(runtime::thread_count()) if (detail::use_parallel(out.elems()))
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int oh = 0; oh < out.h; ++oh) {
        T* yrow =
            yd + ((static_cast<std::int64_t>(n) * out.c + c) * out.h + oh) * out.w;
        const int h = oh / s, i = oh % s;
        for (int ow = 0; ow < out.w; ++ow) {
          const int w = ow / s, j = ow % s;
          const int ic = c * s * s + i * s + j;
          yrow[ow] =
              xd[((static_cast<std::int64_t>(n) * in.c + ic) * in.h + h) * in.w + w];
        }
      }
  return y;
}

// Exact inverse of pixel_shuffle.
template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x, int s) {
  const Shape in = x.shape();
  if (s <= 0) throw ArgumentError("pixel_unshuffle: factor must be positive");
  if (in.h % s != 0 || in.w % s != 0)
    throw ShapeError("pixel_unshuffle: spatial dims not divisible by factor");
  const Shape out{in.n, in.c * s * s, in.h / s, in.w / s};
  TensorT<T> y(out);
  const T* xd = x.data();
  T* yd = y.data();
  for (int n = 0; n < out.n; ++n)
    for (int oc = 0; oc < out.c; ++oc) {
      const int c = oc / (s * s), i = (oc / s) % s, j = oc % s;
      for (int h = 0; h < out.h; ++h) {
        T* yrow =
            yd + ((static_cast<std::int64_t>(n) * out.c + oc) * out.h + h) * out.w;
        const T* xrow = xd + ((static_cast<std::int64_t>(n) * in.c + c) * in.h +
                              (h * s + i)) * in.w;
        for (int w = 0; w < out.w; ++w) yrow[w] = xrow[w * s + j];
      }
    }
  return y;
}

// Max pooling; records the flat input index of each window maximum (first one
// in scan order) when argmax is non-null.
template <typename T>
TensorT<T> max_pool(const TensorT<T>& x, int k, int stride,
                    std::vector<std::int64_t>* argmax = nullptr) {
  const Shape in = x.shape();
  if (k <= 0 || stride <= 0)
    throw ArgumentError("max_pool: window and stride must be positive");
  if (in.h < k || in.w < k)
    throw ShapeError("max_pool: window " + std::to_string(k) +
                     " larger than input " + std::to_string(in.h) + "x" +
                     std::to_string(in.w));
  const Shape out{in.n, in.c, (in.h - k) / stride + 1, (in.w - k) / stride + 1};
  TensorT<T> y(out);
  if (argmax) argmax->assign(static_cast<std::size_t>(out.elems()), 0);
  const T* xd = x.data();
  T* yd = y.data();
  std::int64_t* am = argmax ? argmax->data() : nullptr;
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(runtime::thread_count()) if (detail::use_parallel(out.elems() * k * k))
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c) {
      const T* xch = xd + (static_cast<std::int64_t>(n) * in.c + c) * in.h * in.w;
      const std::int64_t xbase =
          (static_cast<std::int64_t>(n) * in.c + c) * in.h * in.w;
      for (int oh = 0; oh < out.h; ++oh) {
        const std::int64_t orow =
            ((static_cast<std::int64_t>(n) * out.c + c) * out.h + oh) * out.w;
        for (int ow = 0; ow < out.w; ++ow) {
          const int ih0 = oh * stride, iw0 = ow * stride;
          T best = xch[static_cast<std::int64_t>(ih0) * in.w + iw0];
          std::int64_t besti = static_cast<std::int64_t>(ih0) * in.w + iw0;
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const std::int64_t idx =
                  static_cast<std::int64_t>(ih0 + kh) * in.w + (iw0 + kw);
              if (xch[idx] > best) {
                best = xch[idx];
                besti = idx;
              }
            }
          yd[orow + ow] = best;
          if (am) am[orow + ow] = xbase + besti;
        }
      }
    }
  return y;
}

template <typename T>
TensorT<T> max_pool_backward(const TensorT<T>& gy,
                             const std::vector<std::int64_t>& argmax,
                             const Shape& in_shape) {
  if (static_cast<std::int64_t>(argmax.size()) != gy.size())
    throw ShapeError("max_pool_backward: argmax size mismatch");
  TensorT<T> gx(in_shape);
  const T* gd = gy.data();
  T* xd = gx.data();
  // Serial scatter: window overlap makes parallel accumulation racy.
  for (std::int64_t i = 0; i < gy.size(); ++i) xd[argmax[i]] += gd[i];
  return gx;
}

// Bilinear resize with half-pixel sampling and edge clamp. Same-size resize
// reproduces the input bitwise (interpolation fractions are exactly zero).
template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& x, int oh, int ow) {
  const Shape in = x.shape();
  if (oh <= 0 || ow <= 0)
    throw ArgumentError("bilinear_resize: output dims must be positive");
  if (in.h <= 0 || in.w <= 0)
    throw ShapeError("bilinear_resize: empty input");
  const auto rows = detail::lerp_taps<T>(in.h, oh);
  const auto cols = detail::lerp_taps<T>(in.w, ow);
  const Shape out{in.n, in.c, oh, ow};
  TensorT<T> y(out);
  const T* xd = x.data();
  T* yd = y.data();
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(runtime::thread_count()) if (detail::use_parallel(out.elems()))
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c) {
      const T* xch = xd + (static_cast<std::int64_t>(n) * in.c + c) * in.h * in.w;
      T* ych = yd + (static_cast<std::int64_t>(n) * in.c + c) *
                        static_cast<std::int64_t>(oh) * ow;
      for (int r = 0; r < oh; ++r) {
        const auto& rt = rows[static_cast<std::size_t>(r)];
        const T* top = xch + static_cast<std::int64_t>(rt.lo) * in.w;
        const T* bot = xch + static_cast<std::int64_t>(rt.hi) * in.w;
        T* yrow = ych + static_cast<std::int64_t>(r) * ow;
        for (int q = 0; q < ow; ++q) {
          const auto& ct = cols[static_cast<std::size_t>(q)];
          const T a = top[ct.lo] + ct.frac * (top[ct.hi] - top[ct.lo]);
          const T b = bot[ct.lo] + ct.frac * (bot[ct.hi] - bot[ct.lo]);
          yrow[q] = a + rt.frac * (b - a);
        }
      }
    }
  return y;
}

// Adjoint of bilinear_resize; gathers through per-axis inverse tap lists so
// the accumulation order is fixed.
template <typename T>
TensorT<T> bilinear_resize_backward(const TensorT<T>& gy, const Shape& in_shape) {
  const Shape out = gy.shape();
  if (out.n != in_shape.n || out.c != in_shape.c)
    throw ShapeError("bilinear_resize_backward: batch/channel mismatch");
  const auto rows = detail::lerp_taps<T>(in_shape.h, out.h);
  const auto cols = detail::lerp_taps<T>(in_shape.w, out.w);
  std::vector<std::vector<std::pair<int, T>>> rinv(
      static_cast<std::size_t>(in_shape.h));
  std::vector<std::vector<std::pair<int, T>>> cinv(
      static_cast<std::size_t>(in_shape.w));
  for (int o = 0; o < out.h; ++o) {
    const auto& t = rows[static_cast<std::size_t>(o)];
    rinv[static_cast<std::size_t>(t.lo)].push_back({o, T(1) - t.frac});
    rinv[static_cast<std::size_t>(t.hi)].push_back({o, t.frac});
  }
  for (int o = 0; o < out.w; ++o) {
    const auto& t = cols[static_cast<std::size_t>(o)];
    cinv[static_cast<std::size_t>(t.lo)].push_back({o, T(1) - t.frac});
    cinv[static_cast<std::size_t>(t.hi)].push_back({o, t.frac});
  }

  TensorT<T> gx(in_shape);
  const T* gd = gy.data();
  T* xd = gx.data();
#pragma omp parallel for collapse(2) schedule(static) \
    num_threads(runtime::thread_count()) if (detail::use_parallel(in_shape.elems()))
  for (int n = 0; n < in_shape.n; ++n)
    for (int c = 0; c < in_shape.c; ++c) {
      const T* gch = gd + (static_cast<std::int64_t>(n) * out.c + c) *
                              static_cast<std::int64_t>(out.h) * out.w;
      T* xch = xd + (static_cast<std::int64_t>(n) * in_shape.c + c) *
                        static_cast<std::int64_t>(in_shape.h) * in_shape.w;
      for (int ih = 0; ih < in_shape.h; ++ih) {
        T* xrow = xch + static_cast<std::int64_t>(ih) * in_shape.w;
        for (int iw = 0; iw < in_shape.w; ++iw) {
          T acc = T(0);
          for (const auto& [oh, wh] : rinv[static_cast<std::size_t>(ih)]) {
            const T* grow = gch + static_cast<std::int64_t>(oh) * out.w;
            for (const auto& [ow, ww] : cinv[static_cast<std::size_t>(iw)])
              acc += wh * ww * grow[ow];
          }
          xrow[iw] = acc;
        }
      }
    }
  return gx;
}

// --- elementwise ---

template <typename T, typename F>
TensorT<T> binary_map(const TensorT<T>& a, const TensorT<T>& b, F f,
                      const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  TensorT<T> y(a.shape());
  const T* ad = a.data();
  const T* bd = b.data();
  T* yd = y.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) yd[i] = f(ad[i], bd[i]);
  return y;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_map(a, b, [](T x, T y) { return x + y; }, "add");
}
template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_map(a, b, [](T x, T y) { return x - y; }, "sub");
}
template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_map(a, b, [](T x, T y) { return x * y; }, "mul");
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i)
    y[i] = detail::apply_activation(Activation::relu, x[i]);
  return y;
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i)
    y[i] = detail::apply_activation(Activation::sigmoid, x[i]);
  return y;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T a) {
  TensorT<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
  return y;
}

// --- reductions (double accumulation) ---

template <typename T>
T sum(const TensorT<T>& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]);
  return static_cast<T>(acc);
}

template <typename T>
T mean_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mean_abs_diff: shape mismatch");
  if (a.size() == 0) throw ShapeError("mean_abs_diff: empty tensors");
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return static_cast<T>(acc / static_cast<double>(a.size()));
}

// d/da mean|a - b| scaled by coef = upstream / n; sign(0) = 0.
template <typename T>
TensorT<T> l1_backward(const TensorT<T>& a, const TensorT<T>& b, T coef) {
  return binary_map(
      a, b,
      [coef](T x, T y) {
        return x > y ? coef : (x < y ? -coef : T(0));
      },
      "l1_backward");
}

}  // namespace fdan::kernels
