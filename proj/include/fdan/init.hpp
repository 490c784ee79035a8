#pragma once

#include <cmath>

#include "fdan/conv.hpp"
#include "fdan/rng.hpp"
#include "fdan/tensor.hpp"

namespace fdan {

// He (fan-in) initialization: weights ~ N(0, 2 / (in_channels * k^2)),
// biases zero.
template <typename T>
TensorT<T> kaiming_weights(const ConvSpec& spec, Rng& rng) {
  spec.validate();
  const double fan_in =
      static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
  const T std = static_cast<T>(std::sqrt(2.0 / fan_in));
  TensorT<T> w(spec.weight_shape());
  for (std::int64_t i = 0; i < w.size(); ++i)
    w[i] = std * static_cast<T>(rng.gaussian());
  return w;
}

}  // namespace fdan
