#pragma once

#include <cstdint>
#include <string>

#include "fdan/errors.hpp"
#include "fdan/tensor.hpp"

namespace fdan {

enum class Activation { none, relu, sigmoid };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

// Static description of a 2-d convolution: square kernel, equal stride and
// padding on both axes, optional bias, optional fused activation.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  bool has_bias = true;
  Activation activation = Activation::none;

  void validate() const {
    if (in_channels <= 0 || out_channels <= 0)
      throw ConfigError("conv: channel counts must be positive");
    if (kernel <= 0 || stride <= 0 || padding < 0)
      throw ConfigError("conv: kernel/stride must be positive, padding >= 0");
  }

  Shape weight_shape() const { return {out_channels, in_channels, kernel, kernel}; }
  Shape bias_shape() const { return {1, out_channels, 1, 1}; }

  Shape out_shape(const Shape& in) const {
    validate();
    if (in.n <= 0 || in.h <= 0 || in.w <= 0)
      throw ShapeError("conv: bad input shape " + to_string(in));
    if (in.c != in_channels)
      throw ShapeError("conv: input has " + std::to_string(in.c) +
                       " channels, layer expects " + std::to_string(in_channels));
    const int eh = in.h + 2 * padding;
    const int ew = in.w + 2 * padding;
    if (eh < kernel || ew < kernel)
      throw ShapeError("conv: kernel " + std::to_string(kernel) +
                       " exceeds padded input " + std::to_string(eh) + "x" +
                       std::to_string(ew));
    return {in.n, out_channels, (eh - kernel) / stride + 1,
            (ew - kernel) / stride + 1};
  }

  std::int64_t param_count() const {
    return static_cast<std::int64_t>(out_channels) * in_channels * kernel *
               kernel + (has_bias ? out_channels : 0);
  }

  // Multiply-accumulates per output pixel.
  std::int64_t macs_per_output() const {
    return static_cast<std::int64_t>(in_channels) * kernel * kernel;
  }
};

}  // namespace fdan
