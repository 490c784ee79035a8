#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>
#include <doctest.h>

#include "fdan/checkpoint.hpp"
#include "fdan/dataset.hpp"
#include "fdan/resize.hpp"
#include "fdan/trainer.hpp"

using namespace fdan;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  const fs::path d = fs::temp_directory_path() / "fdan_trainer_tests" / leaf;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Tiny on-disk dataset: smooth random 64x64 high-range frames with their
// bicubic 32x32 reductions as inputs.
fs::path make_dataset(const fs::path& dir, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  Manifest m;
  m.base_dir = dir;
  for (int i = 0; i < pairs; ++i) {
    ImageBuffer hr;
    hr.width = hr.height = 64;
    hr.bit_depth = 10;
    hr.color_space = ColorSpace::hdr_2100;
    hr.format = PixelFormat::yuv;
    // Bilinear blow-up of a 4x4 noise grid keeps the content learnable.
    float grid[3][4][4];
    for (auto& plane_grid : grid)
      for (auto& row : plane_grid)
        for (auto& v : row) v = rng.next_float();
    for (int p = 0; p < 3; ++p) {
      hr.planes[p].resize(64 * 64);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const float gx = x / 63.f * 3.f, gy = y / 63.f * 3.f;
          const int x0 = int(gx), y0 = int(gy);
          const int x1 = std::min(x0 + 1, 3), y1 = std::min(y0 + 1, 3);
          const float fx = gx - x0, fy = gy - y0;
          const float top = grid[p][y0][x0] * (1 - fx) + grid[p][y0][x1] * fx;
          const float bot = grid[p][y1][x0] * (1 - fx) + grid[p][y1][x1] * fx;
          const float v = top * (1 - fy) + bot * fy;
          hr.planes[p][std::size_t(y) * 64 + x] =
              std::uint16_t(std::lround(v * 1023.f));
        }
    }
    ImageBuffer lr = bicubic_resize(hr, 32, 32);
    lr.bit_depth = 8;
    lr.color_space = ColorSpace::sdr_709;
    for (auto& plane : lr.planes)
      for (auto& v : plane) v = std::uint16_t(v >> 2);  // 10 -> 8 bit codes

    const std::string stem = "pair" + std::to_string(i);
    save_image(lr, dir / (stem + "_lr.yuv"));
    save_image(hr, dir / (stem + "_hr.yuv"));
    m.entries.push_back({stem + "_lr.yuv", stem + "_hr.yuv", 2});
  }
  const fs::path manifest = dir / "manifest.json";
  save_manifest(m, manifest);
  return manifest;
}

FdanConfig tiny_model() {
  FdanConfig cfg;
  cfg.channels = 8;
  cfg.blocks = 1;
  cfg.groups = 1;
  cfg.scale = 2;
  cfg.seed = 3;
  return cfg;
}

TrainConfig tiny_train(const fs::path& manifest, const fs::path& out) {
  TrainConfig cfg;
  cfg.manifest = manifest;
  cfg.out_dir = out;
  cfg.iterations = 8;
  cfg.batch_size = 2;
  cfg.patch = 32;  // 16x16 inputs, the smallest the gate admits
  cfg.seed = 11;
  cfg.schedule.lr_max = 1e-4;
  cfg.schedule.lr_min = 1e-6;
  return cfg;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("a short run leaves a checkpoint, a log, and finite losses") {
  const fs::path dir = fresh_dir("short");
  const fs::path manifest = make_dataset(dir, 3, 100);
  const TrainConfig cfg = tiny_train(manifest, dir / "out");

  std::vector<double> hook_losses;
  const TrainResult res =
      train(tiny_model(), cfg, [&](std::int64_t, double, double loss) {
        hook_losses.push_back(loss);
      });

  CHECK(res.iterations_run == 8);
  CHECK(res.first_loss > 0);
  CHECK(std::isfinite(res.final_loss));
  CHECK(hook_losses.size() == 8);
  CHECK(hook_losses.front() == res.first_loss);
  CHECK(hook_losses.back() == res.final_loss);
  CHECK(fs::exists(res.checkpoint));
  CHECK(fs::exists(fs::path(res.checkpoint.string() + ".state")));

  const auto lines = read_lines(res.log);
  REQUIRE(lines.size() == 9);  // header + one line per iteration
  CHECK(lines[0] == "iter,lr,loss");
  CHECK(lines[1].rfind("0,", 0) == 0);

  // The checkpoint reloads into a working model.
  const LoadedModel model = load_checkpoint(res.checkpoint);
  CHECK(model.net.config.channels == 8);
}

TEST_CASE("periodic checkpoints appear at the requested cadence") {
  const fs::path dir = fresh_dir("cadence");
  const fs::path manifest = make_dataset(dir, 2, 101);
  TrainConfig cfg = tiny_train(manifest, dir / "out");
  cfg.iterations = 10;
  cfg.checkpoint_every = 5;
  train(tiny_model(), cfg);
  CHECK(fs::exists(dir / "out" / "ckpt_5.fdan"));
  CHECK(fs::exists(dir / "out" / "ckpt_5.fdan.state"));
  // The final boundary is covered by final.fdan instead of a duplicate.
  CHECK(!fs::exists(dir / "out" / "ckpt_10.fdan"));
  CHECK(fs::exists(dir / "out" / "final.fdan"));
}

TEST_CASE("training is deterministic in the seed") {
  const fs::path dir = fresh_dir("deterministic");
  const fs::path manifest = make_dataset(dir, 3, 102);

  TrainConfig a = tiny_train(manifest, dir / "a");
  TrainConfig b = tiny_train(manifest, dir / "b");
  const TrainResult ra = train(tiny_model(), a);
  const TrainResult rb = train(tiny_model(), b);
  CHECK(read_bytes(ra.checkpoint) == read_bytes(rb.checkpoint));
  CHECK(read_lines(ra.log) == read_lines(rb.log));

  TrainConfig c = tiny_train(manifest, dir / "c");
  c.seed = 999;
  const TrainResult rc = train(tiny_model(), c);
  CHECK(read_bytes(ra.checkpoint) != read_bytes(rc.checkpoint));
}

TEST_CASE("an interrupted run resumes bitwise") {
  const fs::path dir = fresh_dir("resume");
  const fs::path manifest = make_dataset(dir, 3, 103);

  TrainConfig full = tiny_train(manifest, dir / "full");
  full.iterations = 14;
  const TrainResult rf = train(tiny_model(), full);

  TrainConfig part = tiny_train(manifest, dir / "part");
  part.iterations = 7;
  const TrainResult rp = train(tiny_model(), part);

  TrainConfig rest = tiny_train(manifest, dir / "part");
  rest.iterations = 14;
  rest.resume = rp.checkpoint;
  const TrainResult rr = train(tiny_model(), rest);

  CHECK(rr.iterations_run == 7);  // the remaining half
  CHECK(read_bytes(rf.checkpoint) == read_bytes(rr.checkpoint));

  // The stitched log equals the uninterrupted one.
  CHECK(read_lines(rf.log) == read_lines(rr.log));

  // Resuming a finished run is refused.
  TrainConfig done = rest;
  done.resume = rr.checkpoint;
  CHECK_THROWS_AS(train(tiny_model(), done), ConfigError);
}

TEST_CASE("divergence aborts with the iteration in the message") {
  const fs::path dir = fresh_dir("nan");
  const fs::path manifest = make_dataset(dir, 2, 104);
  TrainConfig cfg = tiny_train(manifest, dir / "out");

  auto built = build_fdan(tiny_model());
  built.second.at(0).value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train_loop(built.first, built.second, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("config validation catches bad requests") {
  const fs::path dir = fresh_dir("badcfg");
  const fs::path manifest = make_dataset(dir, 2, 105);

  TrainConfig zero_iters = tiny_train(manifest, dir / "o1");
  zero_iters.iterations = 0;
  CHECK_THROWS_AS(train(tiny_model(), zero_iters), ConfigError);

  TrainConfig tiny_patch = tiny_train(manifest, dir / "o2");
  tiny_patch.patch = 16;  // 8x8 inputs fall below the gate minimum
  CHECK_THROWS_AS(train(tiny_model(), tiny_patch), ConfigError);

  TrainConfig misaligned = tiny_train(manifest, dir / "o3");
  misaligned.patch = 33;
  CHECK_THROWS_AS(train(tiny_model(), misaligned), ConfigError);

  TrainConfig no_manifest = tiny_train(dir / "absent.json", dir / "o4");
  CHECK_THROWS_AS(train(tiny_model(), no_manifest), IoError);
}

TEST_CASE("loss trends down on an easy memorization task") {
  const fs::path dir = fresh_dir("descent");
  const fs::path manifest = make_dataset(dir, 2, 106);
  TrainConfig cfg = tiny_train(manifest, dir / "out");
  cfg.iterations = 60;
  cfg.schedule.lr_max = 1e-3;
  cfg.schedule.lr_min = 1e-5;
  cfg.schedule.period = 60;
  cfg.schedule.restart = false;

  std::vector<double> losses;
  train(tiny_model(), cfg,
        [&](std::int64_t, double, double loss) { losses.push_back(loss); });
  REQUIRE(losses.size() == 60);
  double head = 0, tail = 0;
  for (int i = 0; i < 10; ++i) {
    head += losses[std::size_t(i)];
    tail += losses[losses.size() - 1 - std::size_t(i)];
  }
  CHECK(tail < head);
}
