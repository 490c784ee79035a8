// Command-line front end: prepare / train / infer / eval / profile / selftest.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdan/checkpoint.hpp"
#include "fdan/config_io.hpp"
#include "fdan/dataset.hpp"
#include "fdan/gradcheck.hpp"
#include "fdan/init.hpp"
#include "fdan/metrics.hpp"
#include "fdan/profiler.hpp"
#include "fdan/resize.hpp"
#include "fdan/runtime.hpp"
#include "fdan/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("FDAN_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet") return LogLevel::quiet;
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  std::fprintf(stderr, "warning: unknown FDAN_LOG value '%s', using info\n",
               env);
  return LogLevel::info;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::fprintf(stderr, "%s\n", msg.c_str());
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fdan::IoError("cannot open '" + path.string() + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw fdan::ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

// Applies a dotted-path override such as model.channels=32; values parse as
// JSON first, falling back to a plain string.
void apply_override(json& root, const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos || eq == 0)
    throw fdan::ArgumentError("override '" + expr + "' is not key=value");
  const std::string path = expr.substr(0, eq);
  const std::string raw = expr.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &root;
  std::size_t begin = 0;
  while (true) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty())
      throw fdan::ArgumentError("override '" + expr + "' has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

fdan::TrainConfig train_config_from_json(const json& j) {
  fdan::require_keys(j,
                     {"manifest", "out_dir", "iterations", "batch_size",
                      "patch", "seed", "lr_max", "lr_min", "period", "restart",
                      "checkpoint_every", "resume"},
                     "train config");
  fdan::TrainConfig cfg;
  try {
    if (j.contains("manifest"))
      cfg.manifest = j.at("manifest").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("iterations"))
      cfg.iterations = j.at("iterations").get<std::int64_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("patch")) cfg.patch = j.at("patch").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lr_max")) cfg.schedule.lr_max = j.at("lr_max").get<double>();
    if (j.contains("lr_min")) cfg.schedule.lr_min = j.at("lr_min").get<double>();
    if (j.contains("period"))
      cfg.schedule.period = j.at("period").get<std::int64_t>();
    if (j.contains("restart")) cfg.schedule.restart = j.at("restart").get<bool>();
    if (j.contains("checkpoint_every"))
      cfg.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    if (j.contains("resume")) cfg.resume = j.at("resume").get<std::string>();
  } catch (const json::exception& e) {
    throw fdan::ConfigError(std::string("train config: ") + e.what());
  }
  return cfg;
}

// --- subcommand bodies ---

int run_prepare(const fs::path& sdr, const fs::path& hdr, const fs::path& out,
                int scale) {
  fdan::PrepareOptions opt;
  opt.sdr_dir = sdr;
  opt.hdr_dir = hdr;
  opt.out_dir = out;
  opt.scale = scale;
  const fdan::Manifest m = fdan::prepare_dataset(opt);
  log_info("prepared " + std::to_string(m.entries.size()) + " pairs; manifest " +
           (out / "manifest.json").string());
  std::printf("%s\n", (out / "manifest.json").string().c_str());
  return 0;
}

int run_train(const fs::path& config_path,
              const std::vector<std::string>& overrides, std::uint64_t* seed,
              const std::string* out_dir) {
  json root = load_json_file(config_path);
  fdan::require_keys(root, {"model", "train"}, "config");
  if (!root.contains("model") || !root.contains("train"))
    throw fdan::ConfigError("config needs both \"model\" and \"train\" sections");
  for (const auto& o : overrides) apply_override(root, o);
  if (seed) {
    root["model"]["seed"] = *seed;
    root["train"]["seed"] = *seed;
  }
  if (out_dir) root["train"]["out_dir"] = *out_dir;

  const fdan::FdanConfig model_cfg = fdan::config_from_json(root.at("model"));
  const fdan::TrainConfig train_cfg = train_config_from_json(root.at("train"));

  const LogLevel level = log_level();
  const std::int64_t stride =
      train_cfg.iterations > 20 ? train_cfg.iterations / 20 : 1;
  fdan::TrainHook hook = [&](std::int64_t iter, double lr, double loss) {
    if (level >= LogLevel::debug ||
        (level >= LogLevel::info &&
         (iter % stride == 0 || iter + 1 == train_cfg.iterations))) {
      std::fprintf(stderr, "iter %" PRId64 "  lr %.3e  loss %.6f\n", iter, lr,
                   loss);
    }
  };

  const fdan::TrainResult res = fdan::train(model_cfg, train_cfg, hook);
  log_info("finished " + std::to_string(res.iterations_run) + " iterations");
  std::printf("%s\n", res.checkpoint.string().c_str());
  return 0;
}

int run_infer(const fs::path& ckpt, const fs::path& input,
              const fs::path& output) {
  const fdan::LoadedModel model = fdan::load_checkpoint(ckpt);
  const fdan::ImageBuffer in_img = fdan::load_image(input);
  const fdan::Tensor in = fdan::to_tensor(in_img);
  const fdan::Tensor out = model.net.infer(model.params, in);
  // High-range output rides in the input's pixel format; the container must
  // be able to hold it.
  const fdan::ImageBuffer out_img =
      fdan::from_tensor(out, 10, fdan::ColorSpace::hdr_2100, in_img.format);
  fdan::save_image(out_img, output);
  log_info("wrote " + std::to_string(out_img.width) + "x" +
           std::to_string(out_img.height) + " to " + output.string());
  return 0;
}

int run_eval(const fs::path& ckpt, const fs::path& manifest_path,
             const std::string* out_csv) {
  const fdan::LoadedModel model = fdan::load_checkpoint(ckpt);
  const fdan::Manifest manifest = fdan::load_manifest(manifest_path);
  if (manifest.entries.empty())
    throw fdan::ArgumentError("eval: manifest has no entries");

  fdan::MetricReport report;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const fdan::SamplePair pair = fdan::load_pair(manifest, i);
    if (pair.scale != model.net.config.scale)
      throw fdan::ConfigError("eval: pair '" + pair.id + "' has scale " +
                              std::to_string(pair.scale) +
                              ", checkpoint expects " +
                              std::to_string(model.net.config.scale));
    const fdan::Tensor pred_t =
        model.net.infer(model.params, fdan::to_tensor(pair.lr));
    const fdan::ImageBuffer pred = fdan::from_tensor(
        pred_t, pair.hr.bit_depth, pair.hr.color_space, pair.hr.format);
    fdan::MetricRow row;
    row.id = pair.id;
    row.psnr_db = fdan::psnr(fdan::to_luma(pred), fdan::to_luma(pair.hr));
    row.ssim = fdan::ssim(fdan::to_luma(pred), fdan::to_luma(pair.hr));
    report.rows.push_back(row);
    log_info("evaluated '" + pair.id + "'");
  }

  if (out_csv) {
    std::ofstream os(*out_csv, std::ios::trunc);
    if (!os) throw fdan::IoError("cannot open '" + *out_csv + "'");
    report.write_csv(os);
  }
  std::printf("pairs %zu  mean_psnr %.4f  mean_ssim %.6f\n",
              report.rows.size(), report.mean_psnr(), report.mean_ssim());
  return 0;
}

int run_profile(int* scale, const fs::path* config_path, const fs::path* ckpt,
                int* height, int* width, const std::string* out_csv) {
  fdan::FdanConfig cfg;
  if (ckpt) {
    auto [json_text, tensors] = fdan::read_container(*ckpt);
    cfg = fdan::config_from_text(json_text);
  } else if (config_path) {
    json j = load_json_file(*config_path);
    if (j.contains("model")) j = j.at("model");
    cfg = fdan::config_from_json(j);
  }
  if (scale) cfg.scale = *scale;
  cfg.validate();

  auto [net, params] = fdan::build_fdan(cfg);
  auto [h, w] = fdan::native_input_size(cfg.scale);
  if (height) h = *height;
  if (width) w = *width;

  const fdan::CostReport report = fdan::profile_model(net, h, w);
  std::printf("%s\n", report.summary().c_str());
  std::printf("params %" PRId64 "\nmacs %" PRId64 "\nflops %" PRId64
              "\nactivations %" PRId64 "\n",
              report.total_params(), report.total_macs(), report.total_flops(),
              report.total_activations());
  if (out_csv) {
    std::ofstream os(*out_csv, std::ios::trunc);
    if (!os) throw fdan::IoError("cannot open '" + *out_csv + "'");
    report.write_csv(os);
  }
  return 0;
}

// Fast self-contained checks; one line per check.
int run_selftest() {
  int failures = 0;
  auto check = [&failures](const char* name, auto&& fn) {
    try {
      fn();
      std::printf("ok   %s\n", name);
    } catch (const std::exception& e) {
      std::printf("FAIL %s: %s\n", name, e.what());
      ++failures;
    }
  };
  auto expect = [](bool cond, const std::string& what) {
    if (!cond) throw std::runtime_error(what);
  };

  check("conv_unit_kernel", [&] {
    fdan::Tensor x = fdan::Tensor::full({1, 1, 3, 3}, 1.f);
    fdan::ConvSpec spec{1, 1, 3, 1, 1, false, fdan::Activation::none};
    fdan::Tensor w = fdan::Tensor::full(spec.weight_shape(), 1.f);
    const fdan::Tensor y = fdan::kernels::conv2d<float>(x, spec, w, nullptr);
    expect(y.at(0, 0, 1, 1) == 9.f, "center should be 9");
    expect(y.at(0, 0, 0, 0) == 4.f, "corner should be 4");
    expect(y.at(0, 0, 0, 1) == 6.f, "edge should be 6");
  });

  check("pixel_shuffle_mapping", [&] {
    fdan::Tensor x({1, 4, 1, 1}, {0.f, 1.f, 2.f, 3.f});
    const fdan::Tensor y = fdan::kernels::pixel_shuffle(x, 2);
    expect(y.at(0, 0, 0, 0) == 0.f && y.at(0, 0, 0, 1) == 1.f &&
               y.at(0, 0, 1, 0) == 2.f && y.at(0, 0, 1, 1) == 3.f,
           "2x2 block order wrong");
  });

  check("split_concat_roundtrip", [&] {
    fdan::Rng rng(7);
    fdan::Tensor x({2, 6, 4, 4}, [&] {
      std::vector<float> v(2 * 6 * 4 * 4);
      for (auto& f : v) f = rng.next_float();
      return v;
    }());
    const fdan::Tensor a = fdan::kernels::slice_channels(x, 0, 2);
    const fdan::Tensor b = fdan::kernels::slice_channels(x, 2, 6);
    const fdan::Tensor back = fdan::kernels::channel_concat<float>({&a, &b});
    expect(back.shape() == x.shape(), "shape changed");
    for (std::int64_t i = 0; i < x.size(); ++i)
      expect(back[i] == x[i], "value changed");
  });

  const std::int64_t expected_params[4] = {126660, 142248, 204600, 454008};
  const int scales[4] = {2, 4, 8, 16};
  for (int i = 0; i < 4; ++i) {
    const std::string name = "param_count_x" + std::to_string(scales[i]);
    check(name.c_str(), [&] {
      fdan::FdanConfig cfg;
      cfg.scale = scales[i];
      auto [net, ps] = fdan::build_fdan(cfg);
      expect(ps.total_param_count() == expected_params[i],
             "got " + std::to_string(ps.total_param_count()));
    });
  }

  check("group_width_conservation", [&] {
    const int cases[4][2] = {{48, 3}, {32, 2}, {64, 4}, {16, 1}};
    for (const auto& cb : cases) {
      int width = 0, ch = cb[0];
      for (int b = 0; b < cb[1]; ++b) {
        width += ch / 2;  // detail layer
        ch /= 2;
      }
      width += ch;  // final base
      expect(width == cb[0], "width drifted for C=" + std::to_string(cb[0]));
    }
  });

  check("grad_check_small_conv", [&] {
    fdan::Rng rng(11);
    fdan::ConvSpec spec{2, 3, 3, 1, 1, true, fdan::Activation::sigmoid};
    const fdan::TensorT<double> w =
        fdan::kaiming_weights<float>(spec, rng).cast<double>();
    const fdan::TensorT<double> b(spec.bias_shape());
    fdan::TensorT<double> x({1, 2, 5, 5});
    for (std::int64_t i = 0; i < x.size(); ++i)
      x[i] = double(rng.next_float()) - 0.5;
    // Double-precision probe keeps finite-difference noise near 1e-9.
    const double err = fdan::finite_diff_check<double>(
        [&](fdan::Tape<double>& t, fdan::Var in) {
          const fdan::Var wv = t.leaf(w), bv = t.leaf(b);
          return t.sum(t.conv(spec, wv, bv, in));
        },
        x, 1e-4);
    expect(err < 1e-3, "gradient error " + std::to_string(err));
  });

  check("checkpoint_roundtrip", [&] {
    fdan::FdanConfig cfg;
    cfg.channels = 16;
    cfg.blocks = 2;
    cfg.groups = 1;
    cfg.scale = 2;
    auto [net, ps] = fdan::build_fdan(cfg);
    const fs::path tmp =
        fs::temp_directory_path() / "fdan_selftest_ckpt.fdan";
    fdan::save_checkpoint(tmp, cfg, ps);
    const fdan::LoadedModel back = fdan::load_checkpoint(tmp);
    expect(back.params.size() == ps.size(), "parameter count changed");
    for (int i = 0; i < ps.size(); ++i)
      for (std::int64_t j = 0; j < ps.at(i).value.size(); ++j)
        expect(back.params.at(i).value[j] == ps.at(i).value[j],
               "weights changed in round trip");
    fs::remove(tmp);
  });

  check("schedule_endpoints", [&] {
    fdan::LrSchedule s;
    expect(std::abs(fdan::cosine_lr(0, s) - s.lr_max) < 1e-12, "start != max");
    expect(std::abs(fdan::cosine_lr(s.period, s) - s.lr_max) < 1e-12,
           "restart != max");
    const double mid = fdan::cosine_lr(s.period / 2, s);
    expect(std::abs(mid - 0.5 * (s.lr_max + s.lr_min)) < 1e-9,
           "midpoint wrong");
  });

  check("psnr_reference", [&] {
    fdan::LumaPlane a, b;
    a.width = b.width = 8;
    a.height = b.height = 8;
    a.peak = b.peak = 255.f;
    a.values.assign(64, 100.f);
    b.values.assign(64, 101.f);
    const double v = fdan::psnr(a, b);
    expect(std::abs(v - 48.1308) < 1e-3,
           "one-code difference gave " + std::to_string(v));
  });

  return failures == 0 ? 0 : 1;
}

int exit_code_for(fdan::ErrorCategory c) {
  switch (c) {
    case fdan::ErrorCategory::argument: return 2;
    case fdan::ErrorCategory::config: return 3;
    case fdan::ErrorCategory::format: return 4;
    case fdan::ErrorCategory::shape: return 5;
    case fdan::ErrorCategory::numeric: return 6;
    case fdan::ErrorCategory::io: return 7;
    case fdan::ErrorCategory::internal: return 8;
  }
  return 8;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint upscaling and dynamic-range expansion toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 1;
  app.add_option("--threads", threads, "worker threads for the compute kernels")
      ->check(CLI::PositiveNumber);

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "synthesize low-resolution inputs and write a manifest");
  std::string p_sdr, p_hdr, p_out;
  int p_scale = 4;
  prepare->add_option("--sdr", p_sdr, "directory of standard-range sources")
      ->required();
  prepare->add_option("--hdr", p_hdr, "directory of high-range counterparts")
      ->required();
  prepare->add_option("--out", p_out, "output directory")->required();
  prepare->add_option("--scale", p_scale, "downscaling factor")->required();

  // train
  auto* train = app.add_subcommand("train", "optimize a model from a manifest");
  std::string t_config;
  std::vector<std::string> t_sets;
  std::uint64_t t_seed = 0;
  bool t_seed_set = false;
  std::string t_out;
  bool t_out_set = false;
  train->add_option("--config", t_config, "JSON config with model/train sections")
      ->required();
  train->add_option("--set", t_sets, "dotted-path overrides, key=value");
  train->add_option("--seed", t_seed, "override all random seeds")
      ->each([&t_seed_set](const std::string&) { t_seed_set = true; });
  train->add_option("--out", t_out, "override the output directory")
      ->each([&t_out_set](const std::string&) { t_out_set = true; });

  // infer
  auto* infer = app.add_subcommand("infer", "upscale one image");
  std::string i_ckpt, i_out, i_input;
  infer->add_option("--ckpt", i_ckpt, "model checkpoint")->required();
  infer->add_option("--out", i_out, "output image path")->required();
  infer->add_option("input", i_input, "input image")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint on a manifest");
  std::string e_ckpt, e_manifest, e_out;
  bool e_out_set = false;
  eval->add_option("--ckpt", e_ckpt, "model checkpoint")->required();
  eval->add_option("--manifest", e_manifest, "evaluation manifest")->required();
  eval->add_option("--out", e_out, "write per-image CSV here")
      ->each([&e_out_set](const std::string&) { e_out_set = true; });

  // profile
  auto* profile =
      app.add_subcommand("profile", "static cost report for a model");
  int pr_scale = 0;
  std::string pr_config, pr_ckpt, pr_out;
  int pr_h = 0, pr_w = 0;
  profile->add_option("--scale", pr_scale, "upscaling factor");
  profile->add_option("--config", pr_config, "model config JSON");
  profile->add_option("--ckpt", pr_ckpt, "take the config from a checkpoint");
  profile->add_option("--height", pr_h, "input height (default: native frame)");
  profile->add_option("--width", pr_w, "input width (default: native frame)");
  profile->add_option("--out", pr_out, "write per-layer CSV here");

  // selftest
  auto* selftest =
      app.add_subcommand("selftest", "run fast built-in sanity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    fdan::runtime::set_thread_count(threads);
    if (prepare->parsed())
      return run_prepare(p_sdr, p_hdr, p_out, p_scale);
    if (train->parsed())
      return run_train(t_config, t_sets, t_seed_set ? &t_seed : nullptr,
                       t_out_set ? &t_out : nullptr);
    if (infer->parsed()) return run_infer(i_ckpt, i_input, i_out);
    if (eval->parsed())
      return run_eval(e_ckpt, e_manifest, e_out_set ? &e_out : nullptr);
    if (profile->parsed()) {
      if (pr_scale == 0 && pr_config.empty() && pr_ckpt.empty())
        throw fdan::ArgumentError(
            "profile: need --scale, --config, or --ckpt");
      fs::path cfgp = pr_config, ckptp = pr_ckpt;
      return run_profile(pr_scale > 0 ? &pr_scale : nullptr,
                         pr_config.empty() ? nullptr : &cfgp,
                         pr_ckpt.empty() ? nullptr : &ckptp,
                         pr_h > 0 ? &pr_h : nullptr, pr_w > 0 ? &pr_w : nullptr,
                         pr_out.empty() ? nullptr : &pr_out);
    }
    if (selftest->parsed()) return run_selftest();
  } catch (const fdan::Error& e) {
    std::fprintf(stderr, "error: category=%s message=\"%s\"\n",
                 fdan::to_string(e.category()), e.what());
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: category=internal message=\"%s\"\n", e.what());
    return 8;
  }
  return 0;
}
