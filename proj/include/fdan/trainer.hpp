#pragma once

#include <filesystem>
#include <functional>

#include "fdan/model.hpp"
#include "fdan/optim.hpp"

namespace fdan {

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::int64_t iterations = 0;
  int batch_size = 0;  // 0: 32 at scale 2, 64 otherwise
  int patch = 256;     // high-resolution patch edge
  std::uint64_t seed = 0;
  LrSchedule schedule;                // period 0: iterations / 10 (min 1)
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::filesystem::path resume;       // optional checkpoint to continue from
};

struct TrainResult {
  std::int64_t iterations_run = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;
  std::filesystem::path checkpoint;  // final weights
  std::filesystem::path log;         // per-iteration CSV (iter,lr,loss)
};

using TrainHook =
    std::function<void(std::int64_t iter, double lr, double loss)>;

// Builds (or resumes) the model and optimizes mean absolute error between
// predictions and targets drawn from the manifest. Batch composition is a
// pure function of (seed, iteration), so interrupted runs resume bitwise.
TrainResult train(const FdanConfig& model_config, const TrainConfig& cfg,
                  const TrainHook& hook = nullptr);

// Same loop on an existing model; ignores cfg.resume.
TrainResult train_loop(const FdanNetwork& net, ParamStore& params,
                       const TrainConfig& cfg, const TrainHook& hook = nullptr);

}  // namespace fdan
