#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <utility>
#include <doctest.h>

#include "fdan/dataset.hpp"
#include "fdan/image.hpp"
#include "fdan/resize.hpp"
#include "fdan/rng.hpp"

using namespace fdan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "fdan_image_tests";
  fs::create_directories(d);
  return d;
}

ImageBuffer random_image(int w, int h, int bit_depth, ColorSpace cs,
                         PixelFormat fmt, Rng& rng) {
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.bit_depth = bit_depth;
  img.color_space = cs;
  img.format = fmt;
  const std::uint32_t codes = std::uint32_t(img.max_code()) + 1;
  for (auto& plane : img.planes) {
    plane.resize(std::size_t(w) * h);
    for (auto& v : plane) v = std::uint16_t(rng.next_below(codes));
  }
  return img;
}

bool images_equal(const ImageBuffer& a, const ImageBuffer& b) {
  return a.width == b.width && a.height == b.height &&
         a.bit_depth == b.bit_depth && a.color_space == b.color_space &&
         a.format == b.format && a.planes == b.planes;
}

// Direct (non-separable) evaluation of the same resampling rule, kept naive
// on purpose: per output pixel, a full 2D weighted sum with per-axis
// normalization.
float cubic_weight(double t) {
  const double a = -0.5;
  const double x = std::abs(t);
  if (x < 1.0) return float((a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0);
  if (x < 2.0) return float(a * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0));
  return 0.f;
}

std::vector<float> direct_bicubic(const std::vector<float>& src, int w, int h,
                                  int ow, int oh) {
  const double sx = double(w) / ow;
  const double sy = double(h) / oh;
  const double fx = std::max(1.0, sx);
  const double fy = std::max(1.0, sy);
  std::vector<float> out(std::size_t(ow) * oh);
  for (int oy = 0; oy < oh; ++oy) {
    const double cy = (oy + 0.5) * sy - 0.5;
    const int ylo = int(std::floor(cy - 2.0 * fy)) + 1;
    const int yn = 2 * int(std::ceil(2.0 * fy)) + 1;
    for (int ox = 0; ox < ow; ++ox) {
      const double cx = (ox + 0.5) * sx - 0.5;
      const int xlo = int(std::floor(cx - 2.0 * fx)) + 1;
      const int xn = 2 * int(std::ceil(2.0 * fx)) + 1;
      double acc = 0, wsum = 0;
      for (int j = 0; j < yn; ++j) {
        const int yy = std::clamp(ylo + j, 0, h - 1);
        const double wy = cubic_weight((cy - (ylo + j)) / fy);
        double row = 0, roww = 0;
        for (int i = 0; i < xn; ++i) {
          const int xx = std::clamp(xlo + i, 0, w - 1);
          const double wx = cubic_weight((cx - (xlo + i)) / fx);
          row += wx * src[std::size_t(yy) * w + xx];
          roww += wx;
        }
        acc += wy * (roww != 0 ? row / roww : 0.0);
        wsum += wy;
      }
      out[std::size_t(oy) * ow + ox] = float(acc / wsum);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("png 8-bit round trip is bitwise") {
  Rng rng(50);
  const ImageBuffer img =
      random_image(13, 9, 8, ColorSpace::sdr_709, PixelFormat::rgb, rng);
  const fs::path p = temp_dir() / "rt8.png";
  save_image(img, p);
  CHECK(images_equal(load_image(p), img));
}

TEST_CASE("png 16-bit container round trips 10-bit codes") {
  Rng rng(51);
  const ImageBuffer img =
      random_image(8, 11, 10, ColorSpace::hdr_2100, PixelFormat::rgb, rng);
  const fs::path p = temp_dir() / "rt10.png";
  save_image(img, p);
  const ImageBuffer back = load_image(p);
  CHECK(back.bit_depth == 10);
  CHECK(back.color_space == ColorSpace::hdr_2100);
  CHECK(images_equal(back, img));
}

TEST_CASE("png with codes above the 10-bit range is rejected") {
  const fs::path p = temp_dir() / "hot.png";
  std::vector<std::uint16_t> px(3 * 4 * 4, 100);
  px[5] = 2047;  // legal for the container, illegal for the pipeline
  detail::write_png_rgb16(p, 4, 4, px);
  CHECK_THROWS_AS(load_image(p), FormatError);
}

TEST_CASE("yuv round trips both depths") {
  Rng rng(52);
  for (int depth : {8, 10}) {
    const ImageBuffer img =
        random_image(6, 5, depth, depth == 8 ? ColorSpace::sdr_709 : ColorSpace::hdr_2100,
                     PixelFormat::yuv, rng);
    const fs::path p = temp_dir() / ("rt" + std::to_string(depth) + ".yuv");
    save_image(img, p);
    CHECK(fs::exists(p.string() + ".json"));
    CHECK(images_equal(load_image(p), img));
  }
}

TEST_CASE("yuv sidecar validation") {
  Rng rng(53);
  const ImageBuffer img =
      random_image(6, 5, 10, ColorSpace::hdr_2100, PixelFormat::yuv, rng);
  const fs::path p = temp_dir() / "sidecar.yuv";
  save_image(img, p);
  const fs::path sidecar = p.string() + ".json";

  SUBCASE("missing sidecar") {
    fs::remove(sidecar);
    CHECK_THROWS_AS(load_image(p), IoError);
  }

  SUBCASE("unknown key") {
    std::ofstream(sidecar, std::ios::trunc)
        << "{\"width\":6,\"height\":5,\"bit_depth\":10,"
           "\"color_space\":\"hdr_2100\",\"extra\":1}";
    CHECK_THROWS_AS(load_image(p), FormatError);
  }

  SUBCASE("size mismatch") {
    std::ofstream(sidecar, std::ios::trunc)
        << "{\"width\":60,\"height\":5,\"bit_depth\":10,"
           "\"color_space\":\"hdr_2100\"}";
    CHECK_THROWS_AS(load_image(p), FormatError);
  }

  SUBCASE("out-of-range samples") {
    std::ofstream(sidecar, std::ios::trunc)
        << "{\"width\":6,\"height\":5,\"bit_depth\":8,"
           "\"color_space\":\"sdr_709\"}";
    // Same byte size would be 8-bit u8; the u16 payload is twice as long.
    CHECK_THROWS_AS(load_image(p), FormatError);
  }
}

TEST_CASE("unsupported container extension") {
  CHECK_THROWS_AS(load_image(temp_dir() / "x.bmp"), FormatError);
  ImageBuffer img;
  img.width = img.height = 2;
  for (auto& p : img.planes) p.assign(4, 0);
  CHECK_THROWS_AS(save_image(img, temp_dir() / "x.bmp"), FormatError);
}

TEST_CASE("tensor conversion normalizes by the max code and round trips") {
  Rng rng(54);
  const ImageBuffer img =
      random_image(7, 3, 10, ColorSpace::hdr_2100, PixelFormat::rgb, rng);
  const Tensor t = to_tensor(img);
  REQUIRE(t.shape() == Shape{1, 3, 3, 7});
  CHECK(t.at(0, 0, 0, 0) == doctest::Approx(img.planes[0][0] / 1023.f));
  const ImageBuffer back =
      from_tensor(t, 10, ColorSpace::hdr_2100, PixelFormat::rgb);
  CHECK(images_equal(back, img));

  // Values outside [0, 1] clamp instead of wrapping.
  Tensor wild({1, 3, 1, 1}, {-0.5f, 0.5f, 1.5f});
  const ImageBuffer c = from_tensor(wild, 8, ColorSpace::sdr_709, PixelFormat::rgb);
  CHECK(c.planes[0][0] == 0);
  CHECK(c.planes[1][0] == 128);
  CHECK(c.planes[2][0] == 255);
}

TEST_CASE("luma extraction") {
  SUBCASE("yuv passes plane 0 through") {
    Rng rng(55);
    const ImageBuffer img =
        random_image(4, 4, 10, ColorSpace::hdr_2100, PixelFormat::yuv, rng);
    const LumaPlane y = to_luma(img);
    CHECK(y.peak == 1023.f);
    for (std::size_t i = 0; i < y.values.size(); ++i)
      CHECK(y.values[i] == float(img.planes[0][i]));
  }

  SUBCASE("rgb weights depend on the color space") {
    ImageBuffer img;
    img.width = img.height = 1;
    img.bit_depth = 8;
    img.format = PixelFormat::rgb;
    img.color_space = ColorSpace::sdr_709;
    img.planes[0] = {255};
    img.planes[1] = {0};
    img.planes[2] = {0};
    CHECK(to_luma(img).values[0] == doctest::Approx(0.2126 * 255).epsilon(1e-4));

    img.color_space = ColorSpace::hdr_2100;
    img.bit_depth = 10;
    img.planes[0] = {1023};
    CHECK(to_luma(img).values[0] ==
          doctest::Approx(0.2627 * 1023).epsilon(1e-4));
  }
}

TEST_CASE("bicubic resize preserves constants and hits exact target dims") {
  std::vector<float> flat(64 * 36, 7.25f);
  for (auto [ow, oh] : {std::pair{32, 18}, std::pair{16, 9}, std::pair{128, 72}}) {
    const std::vector<float> out = bicubic_resize_plane(flat, 64, 36, ow, oh);
    REQUIRE(int(out.size()) == ow * oh);
    for (float v : out) CHECK(v == doctest::Approx(7.25f).epsilon(1e-6));
  }
}

TEST_CASE("degradation ladder from a 4K frame lands on exact quarters") {
  ImageBuffer img;
  img.width = 3840;
  img.height = 2160;
  img.bit_depth = 8;
  img.format = PixelFormat::rgb;
  Rng rng(56);
  for (auto& p : img.planes) {
    p.resize(std::size_t(3840) * 2160);
    for (auto& v : p) v = std::uint16_t(rng.next_below(256));
  }
  const struct {
    int s, w, h;
  } ladder[] = {{2, 1920, 1080}, {4, 960, 540}, {8, 480, 270}, {16, 240, 135}};
  for (const auto& step : ladder) {
    const ImageBuffer lr = bicubic_resize(img, 3840 / step.s, 2160 / step.s);
    CHECK(lr.width == step.w);
    CHECK(lr.height == step.h);
    CHECK(lr.bit_depth == 8);
    CHECK(lr.planes[0].size() == std::size_t(step.w) * step.h);
  }
}

TEST_CASE("separable resampler matches the direct 2d evaluation") {
  Rng rng(57);
  std::vector<float> src(48 * 32);
  for (auto& v : src) v = 255.f * rng.next_float();

  for (auto [ow, oh] : {std::pair{12, 8}, std::pair{24, 16}, std::pair{96, 64},
                        std::pair{17, 11}}) {
    const std::vector<float> sep = bicubic_resize_plane(src, 48, 32, ow, oh);
    const std::vector<float> dir = direct_bicubic(src, 48, 32, ow, oh);
    double worst = 0;
    for (std::size_t i = 0; i < sep.size(); ++i)
      worst = std::max(worst, std::abs(double(sep[i]) - dir[i]));
    INFO("target ", ow, "x", oh);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("downscaling commutes with aligned cropping away from borders") {
  Rng rng(58);
  const int W = 128, H = 128, s = 4;
  std::vector<float> hr(std::size_t(W) * H);
  for (auto& v : hr) v = rng.next_float();

  const std::vector<float> lr = bicubic_resize_plane(hr, W, H, W / s, H / s);

  const int x0 = 5, y0 = 7, lw = 20, lh = 16;  // LR-space window
  std::vector<float> hr_crop(std::size_t(lw * s) * (lh * s));
  for (int y = 0; y < lh * s; ++y)
    for (int x = 0; x < lw * s; ++x)
      hr_crop[std::size_t(y) * (lw * s) + x] =
          hr[std::size_t(y0 * s + y) * W + (x0 * s + x)];
  const std::vector<float> lr_of_crop =
      bicubic_resize_plane(hr_crop, lw * s, lh * s, lw, lh);

  // The widened kernel reaches 2 LR pixels out, so compare the interior.
  double worst = 0;
  for (int y = 3; y < lh - 3; ++y)
    for (int x = 3; x < lw - 3; ++x) {
      const float a = lr[std::size_t(y0 + y) * (W / s) + (x0 + x)];
      const float b = lr_of_crop[std::size_t(y) * lw + x];
      worst = std::max(worst, std::abs(double(a) - b));
    }
  CHECK(worst < 1e-5);
}

TEST_CASE("crop copies the window and checks bounds") {
  Rng rng(59);
  const ImageBuffer img =
      random_image(10, 8, 8, ColorSpace::sdr_709, PixelFormat::rgb, rng);
  const ImageBuffer c = crop(img, 3, 2, 4, 5);
  CHECK(c.width == 4);
  CHECK(c.height == 5);
  for (int p = 0; p < 3; ++p)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 4; ++x)
        CHECK(c.planes[p][std::size_t(y) * 4 + x] ==
              img.planes[p][std::size_t(y + 2) * 10 + (x + 3)]);

  CHECK_THROWS_AS(crop(img, 7, 0, 4, 4), ArgumentError);
  CHECK_THROWS_AS(crop(img, 0, 0, 0, 4), ArgumentError);
  CHECK_THROWS_AS(crop(img, -1, 0, 4, 4), ArgumentError);
}

TEST_CASE("aligned crop pairs stay glued to the grid") {
  Rng rng(60);
  const int s = 4, W = 40, H = 32;
  // Encode coordinates in the samples so the test can recover the offsets.
  ImageBuffer lr, hr;
  lr.width = W / s;
  lr.height = H / s;
  hr.width = W;
  hr.height = H;
  lr.bit_depth = hr.bit_depth = 10;
  lr.color_space = hr.color_space = ColorSpace::hdr_2100;
  lr.format = hr.format = PixelFormat::yuv;
  for (int p = 0; p < 3; ++p) {
    lr.planes[p].resize(std::size_t(lr.width) * lr.height);
    hr.planes[p].resize(std::size_t(W) * H);
  }
  for (int y = 0; y < lr.height; ++y)
    for (int x = 0; x < lr.width; ++x)
      for (int p = 0; p < 3; ++p)
        lr.planes[p][std::size_t(y) * lr.width + x] =
            std::uint16_t(y * lr.width + x);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int p = 0; p < 3; ++p)
        hr.planes[p][std::size_t(y) * W + x] = std::uint16_t((y * W + x) % 1024);

  for (int trial = 0; trial < 20; ++trial) {
    auto [lr_c, hr_c] = crop_aligned_pair(lr, hr, s, 16, rng);
    REQUIRE(lr_c.width == 4);
    REQUIRE(lr_c.height == 4);
    REQUIRE(hr_c.width == 16);
    REQUIRE(hr_c.height == 16);
    const int code = lr_c.planes[0][0];
    const int lx = code % lr.width, ly = code / lr.width;
    CHECK(hr_c.planes[0][0] == std::uint16_t((ly * s * W + lx * s) % 1024));
  }

  CHECK_THROWS_AS(crop_aligned_pair(lr, hr, s, 15, rng), ArgumentError);
  CHECK_THROWS_AS(crop_aligned_pair(lr, hr, s, W + s, rng), ArgumentError);
}

TEST_CASE("flips and quarter turns") {
  Rng rng(61);
  const ImageBuffer img =
      random_image(3, 2, 8, ColorSpace::sdr_709, PixelFormat::rgb, rng);

  SUBCASE("flip twice is the identity") {
    CHECK(images_equal(flip_horizontal(flip_horizontal(img)), img));
  }

  SUBCASE("flip mirrors rows") {
    const ImageBuffer f = flip_horizontal(img);
    CHECK(f.planes[0][0] == img.planes[0][2]);
    CHECK(f.planes[0][2] == img.planes[0][0]);
  }

  SUBCASE("quarter turn oracle on a 2x3 frame") {
    ImageBuffer m;
    m.width = 3;
    m.height = 2;
    m.bit_depth = 8;
    m.format = PixelFormat::rgb;
    for (auto& p : m.planes) p = {0, 1, 2, 3, 4, 5};
    const ImageBuffer r = rotate90(m, 1);
    REQUIRE(r.width == 2);
    REQUIRE(r.height == 3);
    // Counter-clockwise: the right column becomes the top row.
    const std::vector<std::uint16_t> want = {2, 5, 1, 4, 0, 3};
    CHECK(r.planes[0] == want);
  }

  SUBCASE("four quarter turns are the identity") {
    ImageBuffer r = img;
    for (int i = 0; i < 4; ++i) r = rotate90(r, 1);
    CHECK(images_equal(r, img));
    CHECK(images_equal(rotate90(rotate90(img, 2), 2), img));
    CHECK(images_equal(rotate90(img, 0), img));
  }
}

TEST_CASE("paired augmentation applies one transform to both members") {
  Rng rng(62);
  ImageBuffer lr =
      random_image(8, 8, 8, ColorSpace::sdr_709, PixelFormat::rgb, rng);
  ImageBuffer hr =
      random_image(16, 16, 10, ColorSpace::hdr_2100, PixelFormat::rgb, rng);

  SUBCASE("square patches accept every draw") {
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
      ImageBuffer a = lr, b = hr;
      Rng r(seed);
      augment_pair(a, b, r);
      CHECK(a.width == 8);
      CHECK(a.height == 8);
      CHECK(b.width == 16);
      CHECK(b.height == 16);
    }
  }

  SUBCASE("augmentation is deterministic in the stream") {
    ImageBuffer a1 = lr, b1 = hr, a2 = lr, b2 = hr;
    Rng r1(99), r2(99);
    augment_pair(a1, b1, r1);
    augment_pair(a2, b2, r2);
    CHECK(images_equal(a1, a2));
    CHECK(images_equal(b1, b2));
  }

  SUBCASE("odd quarter turns reject non-square patches") {
    ImageBuffer wl = random_image(8, 6, 8, ColorSpace::sdr_709,
                                  PixelFormat::rgb, rng);
    ImageBuffer wh = random_image(16, 12, 10, ColorSpace::hdr_2100,
                                  PixelFormat::rgb, rng);
    bool threw = false;
    for (std::uint64_t seed = 0; seed < 30 && !threw; ++seed) {
      ImageBuffer a = wl, b = wh;
      Rng r(seed);
      try {
        augment_pair(a, b, r);
      } catch (const ArgumentError&) {
        threw = true;
      }
    }
    CHECK(threw);
  }
}

TEST_CASE("manifest save/load round trip and pair validation") {
  const fs::path dir = temp_dir() / "manifest_rt";
  fs::create_directories(dir);
  Rng rng(63);

  const ImageBuffer lr =
      random_image(8, 8, 8, ColorSpace::sdr_709, PixelFormat::rgb, rng);
  const ImageBuffer hr =
      random_image(16, 16, 10, ColorSpace::hdr_2100, PixelFormat::rgb, rng);
  save_image(lr, dir / "a_lr.png");
  save_image(hr, dir / "a_hr.png");

  Manifest m;
  m.base_dir = dir;
  m.entries.push_back({"a_lr.png", "a_hr.png", 2});
  save_manifest(m, dir / "manifest.json");

  const Manifest back = load_manifest(dir / "manifest.json");
  REQUIRE(back.entries.size() == 1);
  CHECK(back.entries[0].lr == "a_lr.png");
  CHECK(back.entries[0].scale == 2);
  CHECK(back.base_dir == dir);

  const SamplePair pair = load_pair(back, 0);
  CHECK(pair.scale == 2);
  CHECK(pair.id == "a_lr");
  CHECK(images_equal(pair.lr, lr));
  CHECK_THROWS_AS(load_pair(back, 1), ArgumentError);

  Manifest wrong = back;
  wrong.entries[0].scale = 4;  // 8 * 4 != 16
  CHECK_THROWS_AS(load_pair(wrong, 0), FormatError);

  std::ofstream(dir / "bad.json", std::ios::trunc)
      << "[{\"lr\": \"a_lr.png\", \"hr\": \"a_hr.png\", \"scale\": 2, "
         "\"zzz\": true}]";
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), FormatError);
}

TEST_CASE("dataset preparation builds the low-resolution side") {
  const fs::path root = temp_dir() / "prep";
  fs::remove_all(root);
  const fs::path sdr = root / "sdr", hdr = root / "hdr", out = root / "out";
  fs::create_directories(sdr);
  fs::create_directories(hdr);
  Rng rng(64);

  for (const char* stem : {"alpha", "beta"}) {
    save_image(random_image(64, 32, 8, ColorSpace::sdr_709, PixelFormat::rgb,
                            rng),
               sdr / (std::string(stem) + ".png"));
    save_image(random_image(64, 32, 10, ColorSpace::hdr_2100, PixelFormat::rgb,
                            rng),
               hdr / (std::string(stem) + ".png"));
  }

  PrepareOptions opt;
  opt.sdr_dir = sdr;
  opt.hdr_dir = hdr;
  opt.out_dir = out;
  opt.scale = 4;
  const Manifest m = prepare_dataset(opt);
  CHECK(m.entries.size() == 2);
  CHECK(fs::exists(out / "manifest.json"));

  const Manifest loaded = load_manifest(out / "manifest.json");
  REQUIRE(loaded.entries.size() == 2);
  for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
    const SamplePair pair = load_pair(loaded, i);
    CHECK(pair.lr.width == 16);
    CHECK(pair.lr.height == 8);
    CHECK(pair.lr.bit_depth == 8);
    CHECK(pair.hr.width == 64);
    CHECK(pair.hr.bit_depth == 10);
  }

  SUBCASE("missing high-range counterpart") {
    save_image(random_image(64, 32, 8, ColorSpace::sdr_709, PixelFormat::rgb,
                            rng),
               sdr / "gamma.png");
    CHECK_THROWS_AS(prepare_dataset(opt), ArgumentError);
    fs::remove(sdr / "gamma.png");
  }

  SUBCASE("dimension mismatch between the pair") {
    save_image(random_image(64, 32, 8, ColorSpace::sdr_709, PixelFormat::rgb,
                            rng),
               sdr / "delta.png");
    save_image(random_image(32, 32, 10, ColorSpace::hdr_2100, PixelFormat::rgb,
                            rng),
               hdr / "delta.png");
    CHECK_THROWS_AS(prepare_dataset(opt), FormatError);
    fs::remove(sdr / "delta.png");
    fs::remove(hdr / "delta.png");
  }

  SUBCASE("frame not divisible by the factor") {
    PrepareOptions odd = opt;
    odd.scale = 2;
    const fs::path sdr2 = root / "sdr2", hdr2 = root / "hdr2";
    fs::create_directories(sdr2);
    fs::create_directories(hdr2);
    save_image(random_image(63, 32, 8, ColorSpace::sdr_709, PixelFormat::rgb,
                            rng),
               sdr2 / "odd.png");
    save_image(random_image(63, 32, 10, ColorSpace::hdr_2100, PixelFormat::rgb,
                            rng),
               hdr2 / "odd.png");
    odd.sdr_dir = sdr2;
    odd.hdr_dir = hdr2;
    odd.out_dir = root / "out2";
    CHECK_THROWS_AS(prepare_dataset(odd), ShapeError);
  }

  SUBCASE("bad inputs") {
    PrepareOptions bad = opt;
    bad.scale = 3;
    CHECK_THROWS_AS(prepare_dataset(bad), ArgumentError);
    PrepareOptions nodir = opt;
    nodir.sdr_dir = root / "nowhere";
    CHECK_THROWS_AS(prepare_dataset(nodir), IoError);
  }
}
