#include "fdan/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace fdan {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kPsnrCap = 100.0;

void check_pair(const LumaPlane& a, const LumaPlane& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError(std::string(what) + ": dims " + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height));
  if (a.width <= 0 || a.height <= 0)
    throw ShapeError(std::string(what) + ": empty planes");
  if (a.peak != b.peak)
    throw ArgumentError(std::string(what) +
                        ": planes have different peak codes");
  if (a.values.size() != static_cast<std::size_t>(a.width) * a.height ||
      b.values.size() != static_cast<std::size_t>(b.width) * b.height)
    throw ShapeError(std::string(what) + ": plane buffer size mismatch");
}

// Normalized 1-d Gaussian window.
std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  const int mid = kWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - mid;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Valid-region separable filtering: output is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& win) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> mid(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k)
        acc += win[static_cast<std::size_t>(k)] *
               src[static_cast<std::size_t>(y) * w + x + k];
      mid[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k)
        acc += win[static_cast<std::size_t>(k)] *
               mid[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const LumaPlane& a, const LumaPlane& b) {
  check_pair(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d =
        static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = static_cast<double>(a.peak);
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const LumaPlane& a, const LumaPlane& b) {
  check_pair(a, b, "ssim");
  if (a.width < kWindow || a.height < kWindow)
    throw ArgumentError("ssim: image smaller than the " +
                        std::to_string(kWindow) + "x" +
                        std::to_string(kWindow) + " window");

  const double L = static_cast<double>(a.peak);
  const double c1 = (kK1 * L) * (kK1 * L);
  const double c2 = (kK2 * L) * (kK2 * L);
  const auto win = gaussian_window();

  const std::size_t n = a.values.size();
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.values[i], y = b.values[i];
    pa[i] = x;
    pb[i] = y;
    paa[i] = x * x;
    pbb[i] = y * y;
    pab[i] = x * y;
  }
  const auto mu_a = filter_valid(pa, a.width, a.height, win);
  const auto mu_b = filter_valid(pb, a.width, a.height, win);
  const auto raw_aa = filter_valid(paa, a.width, a.height, win);
  const auto raw_bb = filter_valid(pbb, a.width, a.height, win);
  const auto raw_ab = filter_valid(pab, a.width, a.height, win);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = raw_aa[i] - ma * ma;
    const double vb = raw_bb[i] - mb * mb;
    const double cov = raw_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double MetricReport::mean_psnr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows)
    s += std::isinf(r.psnr_db) ? kPsnrCap : r.psnr_db;
  return s / static_cast<double>(rows.size());
}

double MetricReport::mean_ssim() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.ssim;
  return s / static_cast<double>(rows.size());
}

void MetricReport::write_csv(std::ostream& os) const {
  os << "id,psnr_db,ssim\n";
  char buf[128];
  for (const auto& r : rows) {
    const double p = std::isinf(r.psnr_db) ? kPsnrCap : r.psnr_db;
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.6f\n", r.id.c_str(), p, r.ssim);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "MEAN,%.4f,%.6f\n", mean_psnr(), mean_ssim());
  os << buf;
}

}  // namespace fdan
