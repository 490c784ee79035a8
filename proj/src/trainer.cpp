#include "fdan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fdan/checkpoint.hpp"
#include "fdan/dataset.hpp"

namespace fdan {

namespace fs = std::filesystem;

namespace {

TrainConfig resolved(const TrainConfig& raw, int scale) {
  TrainConfig cfg = raw;
  if (cfg.iterations <= 0)
    throw ConfigError("train: iterations must be positive");
  if (cfg.batch_size == 0) cfg.batch_size = scale == 2 ? 32 : 64;
  if (cfg.batch_size < 0) throw ConfigError("train: negative batch size");
  if (cfg.patch <= 0 || cfg.patch % scale != 0)
    throw ConfigError("train: patch must be a positive multiple of scale");
  if (cfg.patch / scale < kMinSpatialInput)
    throw ConfigError("train: patch / scale below the network minimum of " +
                      std::to_string(kMinSpatialInput));
  if (cfg.schedule.period == 0) {
    cfg.schedule.period = cfg.iterations / 10;
    if (cfg.schedule.period < 1) cfg.schedule.period = 1;
  }
  if (cfg.checkpoint_every < 0)
    throw ConfigError("train: negative checkpoint interval");
  if (cfg.manifest.empty()) throw ConfigError("train: manifest path required");
  if (cfg.out_dir.empty()) throw ConfigError("train: output directory required");
  return cfg;
}

// Tiny LRU over decoded pairs; datasets are small but 4K content is not.
class PairCache {
 public:
  PairCache(const Manifest& m, std::size_t capacity)
      : manifest_(m), capacity_(capacity) {}

  const SamplePair& get(std::size_t index) {
    for (auto& e : entries_)
      if (e.index == index) {
        e.tick = ++tick_;
        return e.pair;
      }
    if (entries_.size() >= capacity_) {
      std::size_t oldest = 0;
      for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i].tick < entries_[oldest].tick) oldest = i;
      entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(oldest));
    }
    entries_.push_back(Entry{index, load_pair(manifest_, index), ++tick_});
    return entries_.back().pair;
  }

 private:
  struct Entry {
    std::size_t index;
    SamplePair pair;
    std::uint64_t tick;
  };
  const Manifest& manifest_;
  std::size_t capacity_;
  std::uint64_t tick_ = 0;
  std::vector<Entry> entries_;
};

void copy_into_batch(Tensor& batch, int slot, const ImageBuffer& img) {
  const Shape s = batch.shape();
  if (img.height != s.h || img.width != s.w)
    throw InternalError("train: patch dims drifted from batch dims");
  const float inv = 1.f / static_cast<float>(img.max_code());
  for (int c = 0; c < 3; ++c) {
    float* dst = batch.data() +
                 ((static_cast<std::int64_t>(slot) * 3 + c) * s.h) * s.w;
    const auto& plane = img.planes[static_cast<std::size_t>(c)];
    for (std::int64_t i = 0; i < img.pixels(); ++i)
      dst[i] = static_cast<float>(plane[static_cast<std::size_t>(i)]) * inv;
  }
}

std::string state_path(const fs::path& ckpt) { return ckpt.string() + ".state"; }

void save_state(const fs::path& ckpt, const ParamStore& ps, const Adam& adam,
                std::int64_t next_iter) {
  nlohmann::json j{{"kind", "optim_state"},
                   {"iter", next_iter},
                   {"steps", adam.steps()}};
  std::vector<NamedTensor> tensors;
  tensors.reserve(static_cast<std::size_t>(ps.size()) * 2);
  for (int i = 0; i < ps.size(); ++i) {
    tensors.push_back(
        NamedTensor{"optim." + ps.at(i).name + ".m", adam.first_moment(i)});
    tensors.push_back(
        NamedTensor{"optim." + ps.at(i).name + ".v", adam.second_moment(i)});
  }
  write_container(state_path(ckpt), j.dump(), tensors);
}

// Returns the iteration to continue from.
std::int64_t load_state(const fs::path& ckpt, const ParamStore& ps,
                        Adam& adam) {
  const fs::path sp = state_path(ckpt);
  auto [json_text, tensors] = read_container(sp);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sp.string() + ": invalid state blob: " + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "optim_state")
    throw FormatError(sp.string() + ": not an optimizer state file");
  const std::int64_t next_iter = j.at("iter").get<std::int64_t>();
  const std::int64_t steps = j.at("steps").get<std::int64_t>();

  if (tensors.size() != static_cast<std::size_t>(ps.size()) * 2)
    throw FormatError(sp.string() + ": wrong tensor count");
  std::vector<Tensor> m, v;
  for (int i = 0; i < ps.size(); ++i) {
    const auto& tm = tensors[static_cast<std::size_t>(i) * 2];
    const auto& tv = tensors[static_cast<std::size_t>(i) * 2 + 1];
    if (tm.name != "optim." + ps.at(i).name + ".m" ||
        tv.name != "optim." + ps.at(i).name + ".v")
      throw FormatError(sp.string() + ": unexpected tensor '" + tm.name + "'");
    m.push_back(tm.value);
    v.push_back(tv.value);
  }
  adam.restore(std::move(m), std::move(v), steps);
  return next_iter;
}

TrainResult run(const FdanNetwork& net, ParamStore& ps, Adam& adam,
                std::int64_t start_iter, const TrainConfig& cfg,
                const TrainHook& hook) {
  const int scale = net.config.scale;
  const Manifest manifest = load_manifest(cfg.manifest);
  if (manifest.entries.empty())
    throw ArgumentError("train: manifest has no entries");
  fs::create_directories(cfg.out_dir);

  const fs::path log_path = cfg.out_dir / "train_log.csv";
  std::ofstream log(log_path, start_iter > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open '" + log_path.string() + "'");
  if (start_iter == 0) log << "iter,lr,loss\n";

  PairCache cache(manifest, 8);
  const int B = cfg.batch_size;
  const int lp = cfg.patch / scale;
  Tensor lr_batch(Shape{B, 3, lp, lp});
  Tensor hr_batch(Shape{B, 3, cfg.patch, cfg.patch});

  TrainResult result;
  result.log = log_path;
  bool first = true;
  for (std::int64_t iter = start_iter; iter < cfg.iterations; ++iter) {
    const double lr = cosine_lr(iter, cfg.schedule);
    Rng iter_rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(iter));
    for (int j = 0; j < B; ++j) {
      Rng r = iter_rng.fork(static_cast<std::uint64_t>(j));
      const std::size_t idx =
          r.next_below(static_cast<std::uint32_t>(manifest.entries.size()));
      const SamplePair& pair = cache.get(idx);
      auto [lr_patch, hr_patch] =
          crop_aligned_pair(pair.lr, pair.hr, scale, cfg.patch, r);
      augment_pair(lr_patch, hr_patch, r);
      copy_into_batch(lr_batch, j, lr_patch);
      copy_into_batch(hr_batch, j, hr_patch);
    }

    double loss_value = 0.0;
    try {
      Tape<float> tape;
      TapeCtx<float> ctx(tape, ps);
      const Var input = tape.leaf(lr_batch);
      const Var target = tape.leaf(hr_batch);
      const Var pred = net.forward(ctx, input);
      const Var loss = tape.l1_loss(pred, target);
      loss_value = static_cast<double>(tape.value(loss)[0]);
      if (!std::isfinite(loss_value))
        throw NumericError("non-finite loss");
      tape.backward(loss);
      ctx.collect_grads(ps);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at iteration " +
                         std::to_string(iter) + ": " + e.what());
    }
    adam.step(ps, static_cast<float>(lr));

    char line[96];
    std::snprintf(line, sizeof(line), "%lld,%.9e,%.9e\n",
                  static_cast<long long>(iter), lr, loss_value);
    log << line;
    log.flush();
    if (hook) hook(iter, lr, loss_value);

    if (first) {
      result.first_loss = loss_value;
      first = false;
    }
    result.final_loss = loss_value;
    ++result.iterations_run;

    if (cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 &&
        iter + 1 < cfg.iterations) {
      const fs::path p =
          cfg.out_dir / ("ckpt_" + std::to_string(iter + 1) + ".fdan");
      save_checkpoint(p, net.config, ps);
      save_state(p, ps, adam, iter + 1);
    }
  }

  result.checkpoint = cfg.out_dir / "final.fdan";
  save_checkpoint(result.checkpoint, net.config, ps);
  save_state(result.checkpoint, ps, adam, cfg.iterations);
  return result;
}

}  // namespace

TrainResult train(const FdanConfig& model_config, const TrainConfig& raw,
                  const TrainHook& hook) {
  model_config.validate();
  const TrainConfig cfg = resolved(raw, model_config.scale);
  if (cfg.resume.empty()) {
    auto [net, ps] = build_fdan(model_config);
    Adam adam(ps);
    return run(net, ps, adam, 0, cfg, hook);
  }
  auto [net, ps] = build_fdan(model_config);
  load_checkpoint_into(cfg.resume, model_config, ps);
  Adam adam(ps);
  const std::int64_t start = load_state(cfg.resume, ps, adam);
  if (start >= cfg.iterations)
    throw ConfigError("train: resume point " + std::to_string(start) +
                      " is at or past the requested " +
                      std::to_string(cfg.iterations) + " iterations");
  return run(net, ps, adam, start, cfg, hook);
}

TrainResult train_loop(const FdanNetwork& net, ParamStore& params,
                       const TrainConfig& raw, const TrainHook& hook) {
  const TrainConfig cfg = resolved(raw, net.config.scale);
  Adam adam(params);
  return run(net, params, adam, 0, cfg, hook);
}

}  // namespace fdan
