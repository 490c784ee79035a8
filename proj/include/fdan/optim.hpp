#pragma once

#include <cstdint>
#include <vector>

#include "fdan/params.hpp"

namespace fdan {

// Adam with fixed (beta1, beta2, eps) = (0.9, 0.999, 1e-8) and bias
// correction. Moment buffers follow the store's registration order.
class Adam {
 public:
  explicit Adam(const ParamStore& ps);

  void step(ParamStore& ps, float lr);

  std::int64_t steps() const { return t_; }
  const Tensor& first_moment(int i) const { return m_[check(i)]; }
  const Tensor& second_moment(int i) const { return v_[check(i)]; }

  // Replaces the full optimizer state (used when resuming a run).
  void restore(std::vector<Tensor> m, std::vector<Tensor> v, std::int64_t t);

  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEps = 1e-8f;

 private:
  std::size_t check(int i) const {
    if (i < 0 || i >= static_cast<int>(m_.size()))
      throw InternalError("adam: parameter index out of range");
    return static_cast<std::size_t>(i);
  }

  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

// Cosine annealing between lr_max and lr_min over `period` iterations; with
// restart the phase wraps, otherwise it saturates at lr_min.
struct LrSchedule {
  double lr_max = 5e-5;
  double lr_min = 1e-11;
  std::int64_t period = 9376;
  bool restart = true;
};

double cosine_lr(std::int64_t iter, const LrSchedule& s);

}  // namespace fdan
