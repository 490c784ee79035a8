#pragma once

#include <cmath>
#include <cstdint>

#include "fdan/conv.hpp"
#include "fdan/tensor.hpp"

// Serial reference kernels: the plainest possible loop nests, kept as ground
// truth for the parallel kernels. Forward conv uses the same accumulation
// order as kernels::conv2d (so the two agree bitwise); the gradient kernels
// use the natural scatter formulation, which differs only in summation order.

namespace fdan::ref {

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvSpec& spec,
                  const TensorT<T>& w, const TensorT<T>* bias) {
  const Shape in = x.shape();
  const Shape out = spec.out_shape(in);
  TensorT<T> y(out);
  for (int n = 0; n < out.n; ++n)
    for (int oc = 0; oc < out.c; ++oc)
      for (int oh = 0; oh < out.h; ++oh)
        for (int ow = 0; ow < out.w; ++ow) {
          T acc = bias ? bias->at(0, oc, 0, 0) : T(0);
          for (int ic = 0; ic < in.c; ++ic)
            for (int kh = 0; kh < spec.kernel; ++kh) {
              const int ih = oh * spec.stride - spec.padding + kh;
              if (ih < 0 || ih >= in.h) continue;
              for (int kw = 0; kw < spec.kernel; ++kw) {
                const int iw = ow * spec.stride - spec.padding + kw;
                if (iw < 0 || iw >= in.w) continue;
                acc += x.at(n, ic, ih, iw) * w.at(oc, ic, kh, kw);
              }
            }
          switch (spec.activation) {
            case Activation::none: break;
            case Activation::relu: acc = acc > T(0) ? acc : T(0); break;
            case Activation::sigmoid: acc = T(1) / (T(1) + std::exp(-acc)); break;
          }
          y.at(n, oc, oh, ow) = acc;
        }
  return y;
}

template <typename T>
TensorT<T> conv2d_grad_input(const TensorT<T>& gz, const ConvSpec& spec,
                             const TensorT<T>& w, const Shape& in_shape) {
  const Shape out = gz.shape();
  TensorT<T> gx(in_shape);
  for (int n = 0; n < out.n; ++n)
    for (int oc = 0; oc < out.c; ++oc)
      for (int oh = 0; oh < out.h; ++oh)
        for (int ow = 0; ow < out.w; ++ow) {
          const T g = gz.at(n, oc, oh, ow);
          for (int ic = 0; ic < in_shape.c; ++ic)
            for (int kh = 0; kh < spec.kernel; ++kh) {
              const int ih = oh * spec.stride - spec.padding + kh;
              if (ih < 0 || ih >= in_shape.h) continue;
              for (int kw = 0; kw < spec.kernel; ++kw) {
                const int iw = ow * spec.stride - spec.padding + kw;
                if (iw < 0 || iw >= in_shape.w) continue;
                gx.at(n, ic, ih, iw) += g * w.at(oc, ic, kh, kw);
              }
            }
        }
  return gx;
}

template <typename T>
TensorT<T> conv2d_grad_weight(const TensorT<T>& gz, const ConvSpec& spec,
                              const TensorT<T>& x) {
  const Shape in = x.shape();
  const Shape out = gz.shape();
  TensorT<T> gw(spec.weight_shape());
  for (int n = 0; n < out.n; ++n)
    for (int oc = 0; oc < out.c; ++oc)
      for (int oh = 0; oh < out.h; ++oh)
        for (int ow = 0; ow < out.w; ++ow) {
          const T g = gz.at(n, oc, oh, ow);
          for (int ic = 0; ic < in.c; ++ic)
            for (int kh = 0; kh < spec.kernel; ++kh) {
              const int ih = oh * spec.stride - spec.padding + kh;
              if (ih < 0 || ih >= in.h) continue;
              for (int kw = 0; kw < spec.kernel; ++kw) {
                const int iw = ow * spec.stride - spec.padding + kw;
                if (iw < 0 || iw >= in.w) continue;
                gw.at(oc, ic, kh, kw) += g * x.at(n, ic, ih, iw);
              }
            }
        }
  return gw;
}

template <typename T>
TensorT<T> conv2d_grad_bias(const TensorT<T>& gz) {
  const Shape s = gz.shape();
  TensorT<T> gb(Shape{1, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) gb.at(0, c, 0, 0) += gz.at(n, c, h, w);
  return gb;
}

template <typename T>
TensorT<T> max_pool(const TensorT<T>& x, int k, int stride) {
  const Shape in = x.shape();
  const Shape out{in.n, in.c, (in.h - k) / stride + 1, (in.w - k) / stride + 1};
  TensorT<T> y(out);
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int oh = 0; oh < out.h; ++oh)
        for (int ow = 0; ow < out.w; ++ow) {
          T best = x.at(n, c, oh * stride, ow * stride);
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const T v = x.at(n, c, oh * stride + kh, ow * stride + kw);
              if (v > best) best = v;
            }
          y.at(n, c, oh, ow) = best;
        }
  return y;
}

// Direct per-output evaluation in the weighted-sum form; agrees with the
// parallel kernel up to rounding.
template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& x, int oh, int ow) {
  const Shape in = x.shape();
  TensorT<T> y(Shape{in.n, in.c, oh, ow});
  const double sh = static_cast<double>(in.h) / oh;
  const double sw = static_cast<double>(in.w) / ow;
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c)
      for (int r = 0; r < oh; ++r) {
        const double fy = (r + 0.5) * sh - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        if (y0 < 0) { y0 = 0; wy = 0.0; }
        if (y0 >= in.h - 1) { y0 = in.h - 1; wy = 0.0; }
        const int y1 = clampi(y0 + 1, in.h - 1);
        for (int q = 0; q < ow; ++q) {
          const double fx = (q + 0.5) * sw - 0.5;
          int x0 = static_cast<int>(std::floor(fx));
          double wx = fx - x0;
          if (x0 < 0) { x0 = 0; wx = 0.0; }
          if (x0 >= in.w - 1) { x0 = in.w - 1; wx = 0.0; }
          const int x1 = clampi(x0 + 1, in.w - 1);
          const double v =
              (1.0 - wy) * ((1.0 - wx) * x.at(n, c, y0, x0) +
                            wx * x.at(n, c, y0, x1)) +
              wy * ((1.0 - wx) * x.at(n, c, y1, x0) + wx * x.at(n, c, y1, x1));
          y.at(n, c, r, q) = static_cast<T>(v);
        }
      }
  return y;
}

// Scatter-direction pixel shuffle (loops over the input).
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int s) {
  const Shape in = x.shape();
  const Shape out{in.n, in.c / (s * s), in.h * s, in.w * s};
  TensorT<T> y(out);
  for (int n = 0; n < in.n; ++n)
    for (int ic = 0; ic < in.c; ++ic) {
      const int c = ic / (s * s), i = (ic / s) % s, j = ic % s;
      for (int h = 0; h < in.h; ++h)
        for (int w = 0; w < in.w; ++w)
          y.at(n, c, h * s + i, w * s + j) = x.at(n, ic, h, w);
    }
  return y;
}

}  // namespace fdan::ref
