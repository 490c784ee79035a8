#include <cmath>
#include <limits>
#include <sstream>
#include <doctest.h>

#include "fdan/metrics.hpp"
#include "fdan/optim.hpp"
#include "fdan/rng.hpp"

using namespace fdan;

namespace {

ParamStore single_param(std::initializer_list<float> values) {
  ParamStore ps;
  Tensor t({1, 1, 1, int(values.size())}, std::vector<float>(values));
  ps.add("p", std::move(t));
  return ps;
}

LumaPlane plane(int w, int h, float fill, float peak = 255.f) {
  LumaPlane p;
  p.width = w;
  p.height = h;
  p.peak = peak;
  p.values.assign(std::size_t(w) * h, fill);
  return p;
}

// Direct windowed SSIM over every valid 11x11 placement; the product of two
// normalized 1D Gaussians gives the 2D window.
double direct_ssim(const LumaPlane& a, const LumaPlane& b) {
  const int k = 11;
  double g[k];
  double gsum = 0;
  for (int i = 0; i < k; ++i) {
    const double d = i - 5;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gsum += g[i];
  }
  for (int i = 0; i < k; ++i) g[i] /= gsum;

  const double c1 = (0.01 * a.peak) * (0.01 * a.peak);
  const double c2 = (0.03 * a.peak) * (0.03 * a.peak);
  double acc = 0;
  int count = 0;
  for (int y = 0; y + k <= a.height; ++y)
    for (int x = 0; x + k <= a.width; ++x) {
      double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) {
          const double w = g[j] * g[i];
          const double pa = a.values[std::size_t(y + j) * a.width + (x + i)];
          const double pb = b.values[std::size_t(y + j) * b.width + (x + i)];
          ma += w * pa;
          mb += w * pb;
          va += w * pa * pa;
          vb += w * pb * pb;
          cov += w * pa * pb;
        }
      va -= ma * ma;
      vb -= mb * mb;
      cov -= ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

}  // namespace

TEST_CASE("adam first step moves by about lr against the gradient sign") {
  ParamStore ps = single_param({1.f, -2.f, 0.5f});
  ps.at(0).grad = Tensor({1, 1, 1, 3}, {0.3f, -0.7f, 2.0f});
  Adam opt(ps);
  opt.step(ps, 0.01f);
  CHECK(opt.steps() == 1);
  // With bias correction, the first update is lr * g / (|g| + eps).
  CHECK(ps.at(0).value[0] == doctest::Approx(1.f - 0.01f).epsilon(1e-4));
  CHECK(ps.at(0).value[1] == doctest::Approx(-2.f + 0.01f).epsilon(1e-4));
  CHECK(ps.at(0).value[2] == doctest::Approx(0.5f - 0.01f).epsilon(1e-4));
}

TEST_CASE("adam leaves parameters with zero gradient untouched") {
  ParamStore ps = single_param({4.f, -4.f});
  Adam opt(ps);
  for (int i = 0; i < 5; ++i) opt.step(ps, 0.1f);
  CHECK(ps.at(0).value[0] == 4.f);
  CHECK(ps.at(0).value[1] == -4.f);
}

TEST_CASE("adam runs are bitwise reproducible") {
  Rng rng(70);
  ParamStore a = single_param({1.f, 2.f, 3.f, 4.f});
  ParamStore b = single_param({1.f, 2.f, 3.f, 4.f});
  Adam oa(a), ob(b);
  for (int step = 0; step < 10; ++step) {
    Tensor g({1, 1, 1, 4});
    for (int i = 0; i < 4; ++i) g[i] = rng.next_float() - 0.5f;
    a.at(0).grad = g;
    b.at(0).grad = g;
    oa.step(a, 0.05f);
    ob.step(b, 0.05f);
  }
  for (int i = 0; i < 4; ++i)
    CHECK(a.at(0).value[i] == b.at(0).value[i]);
}

TEST_CASE("adam steps stay bounded relative to the learning rate") {
  Rng rng(71);
  ParamStore ps = single_param({0.f});
  Adam opt(ps);
  const float lr = 0.01f;
  float prev = 0.f;
  for (int i = 0; i < 100; ++i) {
    ps.at(0).grad[0] = 5.f * (rng.next_float() - 0.5f);
    opt.step(ps, lr);
    const float delta = ps.at(0).value[0] - prev;
    prev = ps.at(0).value[0];
    CHECK(std::abs(delta) <= 3.2f * lr);
  }
}

TEST_CASE("adam state restore continues bitwise") {
  Rng rng(72);
  auto make_grad = [&](int step) {
    Tensor g({1, 1, 1, 2});
    Rng r = Rng(7).fork(std::uint64_t(step));
    g[0] = r.next_float() - 0.5f;
    g[1] = r.next_float() - 0.5f;
    return g;
  };

  ParamStore full = single_param({1.f, -1.f});
  Adam opt_full(full);
  for (int i = 0; i < 20; ++i) {
    full.at(0).grad = make_grad(i);
    opt_full.step(full, 0.02f);
  }

  ParamStore half = single_param({1.f, -1.f});
  Adam opt_half(half);
  for (int i = 0; i < 10; ++i) {
    half.at(0).grad = make_grad(i);
    opt_half.step(half, 0.02f);
  }
  // Snapshot and restore into a fresh optimizer, then finish the run.
  Adam resumed(half);
  resumed.restore({opt_half.first_moment(0)}, {opt_half.second_moment(0)},
                  opt_half.steps());
  for (int i = 10; i < 20; ++i) {
    half.at(0).grad = make_grad(i);
    resumed.step(half, 0.02f);
  }
  CHECK(half.at(0).value[0] == full.at(0).value[0]);
  CHECK(half.at(0).value[1] == full.at(0).value[1]);

  CHECK_THROWS_AS(resumed.restore({}, {}, 3), FormatError);
}

TEST_CASE("cosine schedule endpoints, restart, and saturation") {
  LrSchedule s;
  s.lr_max = 1e-3;
  s.lr_min = 1e-5;
  s.period = 100;

  CHECK(cosine_lr(0, s) == doctest::Approx(1e-3));
  CHECK(cosine_lr(50, s) == doctest::Approx(0.5 * (1e-3 + 1e-5)));
  CHECK(cosine_lr(100, s) == doctest::Approx(1e-3));  // wrapped
  CHECK(cosine_lr(150, s) == doctest::Approx(0.5 * (1e-3 + 1e-5)));

  LrSchedule once = s;
  once.restart = false;
  CHECK(cosine_lr(99, once) > cosine_lr(100, once));
  CHECK(cosine_lr(100, once) == doctest::Approx(1e-5));
  CHECK(cosine_lr(5000, once) == doctest::Approx(1e-5));

  for (int i = 0; i < 300; ++i) {
    const double lr = cosine_lr(i, s);
    CHECK(lr <= 1e-3 + 1e-12);
    CHECK(lr >= 1e-5 - 1e-12);
  }

  CHECK_THROWS_AS(cosine_lr(-1, s), ArgumentError);
  LrSchedule bad = s;
  bad.period = 0;
  CHECK_THROWS_AS(cosine_lr(0, bad), ConfigError);
  LrSchedule inverted = s;
  inverted.lr_min = 1.0;
  CHECK_THROWS_AS(cosine_lr(0, inverted), ConfigError);
}

TEST_CASE("psnr reference points") {
  // One code of error across an 8-bit frame: 20 log10(255) = 48.1308 dB.
  LumaPlane a = plane(8, 8, 100.f);
  LumaPlane b = plane(8, 8, 101.f);
  CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-5));

  // Identical planes saturate to infinity.
  CHECK(std::isinf(psnr(a, a)));

  // Doubling the mean squared error costs 10 log10(2) = 3.0103 dB.
  LumaPlane half = plane(8, 8, 100.f);
  for (std::size_t i = 0; i < half.values.size(); i += 2)
    half.values[i] = 101.f;
  CHECK(psnr(a, half) - psnr(a, b) == doctest::Approx(3.0103).epsilon(1e-4));

  // 10-bit scale changes the peak term.
  LumaPlane ha = plane(8, 8, 400.f, 1023.f);
  LumaPlane hb = plane(8, 8, 401.f, 1023.f);
  CHECK(psnr(ha, hb) == doctest::Approx(20.0 * std::log10(1023.0)).epsilon(1e-6));

  LumaPlane small = plane(4, 8, 100.f);
  CHECK_THROWS_AS(psnr(a, small), ShapeError);
  LumaPlane otherpeak = plane(8, 8, 100.f, 1023.f);
  CHECK_THROWS_AS(psnr(a, otherpeak), ArgumentError);
}

TEST_CASE("ssim equals one on identical images and is symmetric") {
  Rng rng(73);
  LumaPlane a = plane(16, 16, 0.f);
  for (auto& v : a.values) v = 255.f * rng.next_float();
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  LumaPlane b = a;
  for (auto& v : b.values) v = std::min(255.f, v + 10.f * rng.next_float());
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(ssim(a, b) < 1.0);
  CHECK(ssim(a, b) > 0.0);
}

TEST_CASE("ssim matches a direct windowed evaluation") {
  Rng rng(74);
  for (int trial = 0; trial < 20; ++trial) {
    LumaPlane a = plane(32, 32, 0.f);
    LumaPlane b = plane(32, 32, 0.f);
    for (auto& v : a.values) v = 255.f * rng.next_float();
    for (std::size_t i = 0; i < b.values.size(); ++i)
      b.values[i] = 0.7f * a.values[i] + 70.f * rng.next_float();
    const double fast = ssim(a, b);
    const double slow = direct_ssim(a, b);
    INFO("trial ", trial);
    CHECK(std::abs(fast - slow) < 1e-6);
  }
}

TEST_CASE("ssim refuses frames smaller than its window") {
  LumaPlane tiny = plane(10, 16, 1.f);
  CHECK_THROWS_AS(ssim(tiny, tiny), ArgumentError);
}

TEST_CASE("metric report aggregates and serializes") {
  MetricReport r;
  r.rows.push_back({"one", 30.0, 0.9});
  r.rows.push_back({"two", 40.0, 0.8});
  r.rows.push_back({"perfect", std::numeric_limits<double>::infinity(), 1.0});
  CHECK(r.mean_psnr() == doctest::Approx((30.0 + 40.0 + 100.0) / 3.0));
  CHECK(r.mean_ssim() == doctest::Approx(0.9));

  std::ostringstream os;
  r.write_csv(os);
  const std::string text = os.str();
  CHECK(text.rfind("id,psnr_db,ssim\n", 0) == 0);
  CHECK(text.find("one,30.0000,0.900000") != std::string::npos);
  CHECK(text.find("MEAN,") != std::string::npos);
}
