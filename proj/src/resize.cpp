#include "fdan/resize.hpp"

#include <cmath>

namespace fdan {

namespace {

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return a * (((t - 5.0) * t + 8.0) * t - 4.0);
  return 0.0;
}

struct TapSet {
  int taps = 0;                 // taps per output sample
  std::vector<int> index;       // out * taps source indices (edge-clamped)
  std::vector<double> weight;   // matching weights, normalized per output
};

TapSet make_taps(int in, int out) {
  if (in <= 0 || out <= 0)
    throw ArgumentError("bicubic: dimensions must be positive");
  const double step = static_cast<double>(in) / out;
  const double f = step > 1.0 ? step : 1.0;  // kernel widening when shrinking
  const double support = 2.0 * f;
  const int taps = static_cast<int>(std::ceil(support)) * 2 + 1;

  TapSet ts;
  ts.taps = taps;
  ts.index.resize(static_cast<std::size_t>(out) * taps);
  ts.weight.resize(static_cast<std::size_t>(out) * taps);
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * step - 0.5;
    const int lo = static_cast<int>(std::floor(center - support)) + 1;
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
      const int i = lo + k;
      const double w = cubic_kernel((i - center) / f);
      int ci = i < 0 ? 0 : (i >= in ? in - 1 : i);
      ts.index[static_cast<std::size_t>(o) * taps + k] = ci;
      ts.weight[static_cast<std::size_t>(o) * taps + k] = w;
      sum += w;
    }
    for (int k = 0; k < taps; ++k)
      ts.weight[static_cast<std::size_t>(o) * taps + k] /= sum;
  }
  return ts;
}

// Horizontal pass then vertical pass, all in double.
std::vector<double> resample(const std::vector<double>& src, int w, int h,
                             int ow, int oh) {
  const TapSet tx = make_taps(w, ow);
  const TapSet ty = make_taps(h, oh);

  std::vector<double> mid(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      const std::size_t base = static_cast<std::size_t>(x) * tx.taps;
      for (int k = 0; k < tx.taps; ++k)
        acc += tx.weight[base + k] * row[tx.index[base + k]];
      mid[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }

  std::vector<double> dst(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * ty.taps;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < ty.taps; ++k)
        acc += ty.weight[base + k] *
               mid[static_cast<std::size_t>(ty.index[base + k]) * ow + x];
      dst[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return dst;
}

}  // namespace

std::vector<float> bicubic_resize_plane(const std::vector<float>& src, int w,
                                        int h, int ow, int oh) {
  if (src.size() != static_cast<std::size_t>(w) * h)
    throw ShapeError("bicubic: plane size does not match dimensions");
  std::vector<double> tmp(src.begin(), src.end());
  const std::vector<double> out = resample(tmp, w, h, ow, oh);
  return std::vector<float>(out.begin(), out.end());
}

ImageBuffer bicubic_resize(const ImageBuffer& img, int ow, int oh) {
  img.validate();
  if (ow <= 0 || oh <= 0)
    throw ArgumentError("bicubic: output dims must be positive");
  ImageBuffer out;
  out.width = ow;
  out.height = oh;
  out.bit_depth = img.bit_depth;
  out.color_space = img.color_space;
  out.format = img.format;
  const double peak = img.max_code();
  for (int p = 0; p < 3; ++p) {
    const auto& plane = img.planes[static_cast<std::size_t>(p)];
    std::vector<double> tmp(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i)
      tmp[i] = static_cast<double>(plane[i]);
    const std::vector<double> res = resample(tmp, img.width, img.height, ow, oh);
    auto& dst = out.planes[static_cast<std::size_t>(p)];
    dst.resize(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) {
      double v = std::round(res[i]);
      v = v < 0.0 ? 0.0 : (v > peak ? peak : v);
      dst[i] = static_cast<std::uint16_t>(v);
    }
  }
  return out;
}

Tensor bicubic_resize(const Tensor& t, int oh, int ow) {
  const Shape s = t.shape();
  if (s.elems() <= 0) throw ShapeError("bicubic: empty tensor");
  Tensor out(Shape{s.n, s.c, oh, ow});
  const std::size_t in_plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* src =
          t.data() + (static_cast<std::int64_t>(n) * s.c + c) * in_plane;
      std::vector<double> tmp(src, src + in_plane);
      const std::vector<double> res = resample(tmp, s.w, s.h, ow, oh);
      float* dst =
          out.data() + (static_cast<std::int64_t>(n) * s.c + c) * out_plane;
      for (std::size_t i = 0; i < out_plane; ++i)
        dst[i] = static_cast<float>(res[i]);
    }
  return out;
}

}  // namespace fdan
