#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fdan/autograd.hpp"
#include "fdan/conv.hpp"
#include "fdan/kernels.hpp"
#include "fdan/params.hpp"
#include "fdan/rng.hpp"

namespace fdan {

// Joint upscaling / dynamic-range expansion network:
//   head conv -> G feature-decomposition groups -> aggregation -> long skip
//   -> reconstruction conv -> pixel shuffle.
// Input is a (N, 3, H, W) standard-range image in [0, 1]; output is the
// (N, 3, H*s, W*s) high-range prediction.
struct FdanConfig {
  int channels = 48;   // feature width, halved at every block inside a group
  int blocks = 3;      // decomposition blocks per group
  int groups = 6;      // groups in the backbone
  int scale = 4;       // upscaling factor, one of {2, 4, 8, 16}
  bool aggregate = true;  // false: feed only the last group to reconstruction
  std::uint64_t seed = 0;

  // Throws ConfigError listing every violated constraint.
  void validate() const;
};

// Minimum spatial extent the attention branch can reduce; enforced on every
// network input.
inline constexpr int kMinSpatialInput = 16;

// A convolution plus its parameter slots in the owning ParamStore.
struct ConvLayer {
  std::string label;
  ConvSpec spec;
  int weight = -1;
  int bias = -1;
};

ConvLayer make_conv(ParamStore& ps, Rng& rng, const std::string& path,
                    const ConvSpec& spec);

// --- execution contexts -----------------------------------------------------
//
// The forward wiring below is written once against a small context interface
// and reused for plain inference (V = Tensor), training (V = Var on a tape)
// and static cost analysis (V = Shape, in profiler.hpp). A context provides
// the primitive ops plus shape_of() and a scope() guard for hierarchical
// naming; contexts that don't track names return a no-op guard.

struct NullScope {};

struct EvalCtx {
  using V = Tensor;
  const ParamStore& params;

  NullScope scope(const char*) const { return {}; }
  NullScope scope(const std::string&) const { return {}; }
  Shape shape_of(const V& v) const { return v.shape(); }

  V conv(const ConvLayer& layer, const V& x) const {
    const Tensor* b = layer.bias >= 0 ? &params.at(layer.bias).value : nullptr;
    return kernels::conv2d(x, layer.spec, params.at(layer.weight).value, b);
  }
  std::pair<V, V> channel_split(const V& x, int k) const {
    const int c = x.shape().c;
    if (k <= 0 || k >= c)
      throw ShapeError("channel_split: split point out of range");
    return {kernels::slice_channels(x, 0, k), kernels::slice_channels(x, k, c)};
  }
  V channel_concat(const std::vector<V>& xs) const {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(xs.size());
    for (const auto& x : xs) ptrs.push_back(&x);
    return kernels::channel_concat(ptrs);
  }
  V add(const V& a, const V& b) const { return kernels::add(a, b); }
  V sub(const V& a, const V& b) const { return kernels::sub(a, b); }
  V mul(const V& a, const V& b) const { return kernels::mul(a, b); }
  V pixel_shuffle(const V& x, int s) const { return kernels::pixel_shuffle(x, s); }
  V max_pool(const V& x, int k, int stride) const {
    return kernels::max_pool(x, k, stride);
  }
  V bilinear_resize(const V& x, int oh, int ow) const {
    return kernels::bilinear_resize(x, oh, ow);
  }
};

template <typename T>
struct TapeCtx {
  using V = Var;
  Tape<T>& tape;
  std::vector<Var> param_vars;

  TapeCtx(Tape<T>& t, const ParamStore& ps, bool trainable = true) : tape(t) {
    param_vars.reserve(static_cast<std::size_t>(ps.size()));
    for (const auto& p : ps) {
      if constexpr (std::is_same_v<T, float>) {
        param_vars.push_back(tape.leaf(p.value, trainable));
      } else {
        param_vars.push_back(tape.leaf(p.value.template cast<T>(), trainable));
      }
    }
  }

  NullScope scope(const char*) const { return {}; }
  NullScope scope(const std::string&) const { return {}; }
  Shape shape_of(const V& v) const { return tape.value(v).shape(); }

  V conv(const ConvLayer& layer, const V& x) {
    const Var b = layer.bias >= 0 ? param_vars[layer.bias] : Var{};
    return tape.conv(layer.spec, param_vars[layer.weight], b, x);
  }
  std::pair<V, V> channel_split(const V& x, int k) { return tape.channel_split(x, k); }
  V channel_concat(const std::vector<V>& xs) { return tape.channel_concat(xs); }
  V add(const V& a, const V& b) { return tape.add(a, b); }
  V sub(const V& a, const V& b) { return tape.sub(a, b); }
  V mul(const V& a, const V& b) { return tape.mul(a, b); }
  V pixel_shuffle(const V& x, int s) { return tape.pixel_shuffle(x, s); }
  V max_pool(const V& x, int k, int stride) { return tape.max_pool(x, k, stride); }
  V bilinear_resize(const V& x, int oh, int ow) {
    return tape.bilinear_resize(x, oh, ow);
  }

  // Copies accumulated gradients back into the store (after tape.backward).
  void collect_grads(ParamStore& ps) const {
    for (int i = 0; i < ps.size(); ++i) {
      const TensorT<T> g = tape.grad(param_vars[static_cast<std::size_t>(i)]);
      Tensor& dst = ps.at(i).grad;
      for (std::int64_t j = 0; j < g.size(); ++j)
        dst[j] = static_cast<float>(g[j]);
    }
  }
};

// --- modules ----------------------------------------------------------------

// Splits its input down the channel axis, predicts a base layer from the
// second half, and reports the residual of the first half against it:
//   base0  = conv1x1(second)         (relu)
//   detail = first - base0
//   base   = conv3x3(base0)          (relu)
// Input has `channels`; base and detail both have channels/2.
struct DecompBlock {
  int channels = 0;
  ConvLayer point;   // 1x1, C/2 -> C/2, relu
  ConvLayer spread;  // 3x3, C/2 -> C/2, pad 1, relu

  static DecompBlock build(ParamStore& ps, Rng& rng, const std::string& path,
                           int channels);

  template <typename Ctx>
  std::pair<typename Ctx::V, typename Ctx::V> forward(
      Ctx& ctx, const typename Ctx::V& x) const {
    auto [first, second] = ctx.channel_split(x, channels / 2);
    auto base0 = ctx.conv(point, second);
    auto detail = ctx.sub(first, base0);
    auto base = ctx.conv(spread, base0);
    return {std::move(base), std::move(detail)};
  }
};

// Spatial gate: a strided/pooled branch summarizes context, is resized back,
// merged with a pointwise shortcut, and squashed to a per-pixel mask in
// (0, 1) that multiplies the input.
struct SpatialAttention {
  int channels = 0;
  int folded = 0;  // branch width, channels / 4
  ConvLayer reduce;     // 1x1, C -> f
  ConvLayer shortcut;   // 1x1, f -> f
  ConvLayer down;       // 3x3, f -> f, stride 2, no padding
  ConvLayer refine0;    // 3x3, f -> f, pad 1, relu
  ConvLayer refine1;    // 3x3, f -> f, pad 1, relu
  ConvLayer refine2;    // 3x3, f -> f, pad 1
  ConvLayer expand;     // 1x1, f -> C, sigmoid

  static SpatialAttention build(ParamStore& ps, Rng& rng,
                                const std::string& path, int channels);

  template <typename Ctx>
  typename Ctx::V forward(Ctx& ctx, const typename Ctx::V& x) const {
    [[maybe_unused]] auto guard = ctx.scope("attn");
    const Shape in = ctx.shape_of(x);
    if (in.h < kMinSpatialInput || in.w < kMinSpatialInput)
      throw ShapeError("attention: input " + std::to_string(in.h) + "x" +
                       std::to_string(in.w) + " below minimum " +
                       std::to_string(kMinSpatialInput) + "x" +
                       std::to_string(kMinSpatialInput));
    auto reduced = ctx.conv(reduce, x);
    auto keep = ctx.conv(shortcut, reduced);
    auto branch = ctx.conv(down, reduced);
    branch = ctx.max_pool(branch, 7, 3);
    branch = ctx.conv(refine0, branch);
    branch = ctx.conv(refine1, branch);
    branch = ctx.conv(refine2, branch);
    branch = ctx.bilinear_resize(branch, in.h, in.w);
    auto mask = ctx.conv(expand, ctx.add(branch, keep));
    return ctx.mul(x, mask);
  }
};

// A chain of decomposition blocks over the base path (width halving at each
// step), with every detail layer retained; the concatenation of all details
// plus the final base restores the group's input width, then the spatial
// gate reweights it.
struct DecompGroup {
  std::string label;
  std::vector<DecompBlock> blocks;
  SpatialAttention attention;

  static DecompGroup build(ParamStore& ps, Rng& rng, const std::string& path,
                           int channels, int depth);

  template <typename Ctx>
  typename Ctx::V forward(Ctx& ctx, const typename Ctx::V& x) const {
    [[maybe_unused]] auto guard = ctx.scope(label);
    std::vector<typename Ctx::V> parts;
    parts.reserve(blocks.size() + 1);
    typename Ctx::V base = x;
    for (const auto& block : blocks) {
      auto [next, detail] = block.forward(ctx, base);
      parts.push_back(std::move(detail));
      base = std::move(next);
    }
    parts.push_back(std::move(base));
    auto fused = ctx.channel_concat(parts);
    return attention.forward(ctx, fused);
  }
};

struct FdanNetwork {
  FdanConfig config;
  ConvLayer head;             // 3x3, 3 -> C, pad 1, relu
  std::vector<DecompGroup> groups;
  ConvLayer fuse_point;       // 1x1, G*C -> C, relu (aggregate mode only)
  ConvLayer fuse_spread;      // 3x3, C -> C, pad 1, relu
  ConvLayer recon;            // 3x3, C -> 3*s^2, pad 1, linear

  template <typename Ctx>
  typename Ctx::V forward(Ctx& ctx, const typename Ctx::V& img) const {
    const Shape in = ctx.shape_of(img);
    if (in.c != 3)
      throw ShapeError("network: expected 3 input channels, got " +
                       std::to_string(in.c));
    if (in.h < kMinSpatialInput || in.w < kMinSpatialInput)
      throw ShapeError("network: input " + std::to_string(in.h) + "x" +
                       std::to_string(in.w) + " below minimum " +
                       std::to_string(kMinSpatialInput) + "x" +
                       std::to_string(kMinSpatialInput));
    auto base_feat = ctx.conv(head, img);
    std::vector<typename Ctx::V> collected;
    typename Ctx::V cur = base_feat;
    for (const auto& g : groups) {
      cur = g.forward(ctx, cur);
      if (config.aggregate) collected.push_back(cur);
    }
    typename Ctx::V agg;
    if (config.aggregate)
      agg = ctx.conv(fuse_point, ctx.channel_concat(collected));
    else
      agg = std::move(cur);
    agg = ctx.conv(fuse_spread, agg);
    auto skip = ctx.add(agg, base_feat);
    auto pre = ctx.conv(recon, skip);
    return ctx.pixel_shuffle(pre, config.scale);
  }

  // Plain inference on a (N, 3, H, W) tensor in [0, 1].
  Tensor infer(const ParamStore& ps, const Tensor& img) const {
    EvalCtx ctx{ps};
    return forward(ctx, img);
  }
};

// Builds the network and registers freshly initialized parameters; weight
// initialization is fully determined by config.seed.
std::pair<FdanNetwork, ParamStore> build_fdan(const FdanConfig& config);

}  // namespace fdan
