#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fdan/errors.hpp"
#include "fdan/tensor.hpp"

namespace fdan {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value, zero-initialized
};

// Ordered, uniquely-named parameter registry. Registration order defines the
// serialization order of checkpoints and optimizer state.
class ParamStore {
 public:
  int add(std::string name, Tensor value) {
    if (find(name) >= 0)
      throw InternalError("param store: duplicate name '" + name + "'");
    Tensor grad(value.shape());
    params_.push_back(Param{std::move(name), std::move(value), std::move(grad)});
    return static_cast<int>(params_.size()) - 1;
  }

  Param& at(int i) { return params_[check(i)]; }
  const Param& at(int i) const { return params_[check(i)]; }

  int find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  int size() const { return static_cast<int>(params_.size()); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::int64_t total_param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_)
      for (std::int64_t i = 0; i < p.grad.size(); ++i) p.grad[i] = 0.f;
  }

 private:
  std::size_t check(int i) const {
    if (i < 0 || i >= size())
      throw InternalError("param store: index " + std::to_string(i) +
                          " out of range");
    return static_cast<std::size_t>(i);
  }

  std::vector<Param> params_;
};

}  // namespace fdan
