#include "fdan/model.hpp"

#include "fdan/init.hpp"

namespace fdan {

void FdanConfig::validate() const {
  std::string problems;
  auto complain = [&problems](const std::string& p) {
    if (!problems.empty()) problems += "; ";
    problems += p;
  };
  if (channels <= 0) complain("channels must be positive");
  if (blocks <= 0) complain("blocks must be positive");
  if (groups <= 0) complain("groups must be positive");
  if (channels > 0 && channels % 4 != 0)
    complain("channels must be divisible by 4 for the attention branch");
  if (channels > 0 && blocks > 0) {
    // Width halves at each block, so C must stay even through B splits.
    const int denom = 1 << blocks;
    if (channels % denom != 0)
      complain("channels (" + std::to_string(channels) +
               ") must be divisible by 2^blocks (" + std::to_string(denom) + ")");
  }
  if (scale != 2 && scale != 4 && scale != 8 && scale != 16)
    complain("scale must be one of {2, 4, 8, 16}, got " + std::to_string(scale));
  if (!problems.empty()) throw ConfigError("bad model config: " + problems);
}

namespace {

std::string leaf_of(const std::string& path) {
  const auto pos = path.rfind('.');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

ConvLayer make_conv(ParamStore& ps, Rng& rng, const std::string& path,
                    const ConvSpec& spec) {
  ConvLayer layer;
  layer.label = leaf_of(path);
  layer.spec = spec;
  layer.weight = ps.add(path + ".weight", kaiming_weights<float>(spec, rng));
  if (spec.has_bias)
    layer.bias = ps.add(path + ".bias", Tensor(spec.bias_shape()));
  return layer;
}

DecompBlock DecompBlock::build(ParamStore& ps, Rng& rng,
                               const std::string& path, int channels) {
  if (channels < 2 || channels % 2 != 0)
    throw ConfigError("decomposition block needs an even channel count, got " +
                      std::to_string(channels));
  DecompBlock b;
  b.channels = channels;
  const int half = channels / 2;
  b.point = make_conv(ps, rng, path + ".point",
                      ConvSpec{half, half, 1, 1, 0, true, Activation::relu});
  b.spread = make_conv(ps, rng, path + ".spread",
                       ConvSpec{half, half, 3, 1, 1, true, Activation::relu});
  return b;
}

SpatialAttention SpatialAttention::build(ParamStore& ps, Rng& rng,
                                         const std::string& path,
                                         int channels) {
  if (channels < 4 || channels % 4 != 0)
    throw ConfigError("attention needs channels divisible by 4, got " +
                      std::to_string(channels));
  SpatialAttention a;
  a.channels = channels;
  a.folded = channels / 4;
  const int f = a.folded;
  a.reduce = make_conv(ps, rng, path + ".reduce",
                       ConvSpec{channels, f, 1, 1, 0, true, Activation::none});
  a.shortcut = make_conv(ps, rng, path + ".shortcut",
                         ConvSpec{f, f, 1, 1, 0, true, Activation::none});
  a.down = make_conv(ps, rng, path + ".down",
                     ConvSpec{f, f, 3, 2, 0, true, Activation::none});
  a.refine0 = make_conv(ps, rng, path + ".refine0",
                        ConvSpec{f, f, 3, 1, 1, true, Activation::relu});
  a.refine1 = make_conv(ps, rng, path + ".refine1",
                        ConvSpec{f, f, 3, 1, 1, true, Activation::relu});
  a.refine2 = make_conv(ps, rng, path + ".refine2",
                        ConvSpec{f, f, 3, 1, 1, true, Activation::none});
  a.expand = make_conv(ps, rng, path + ".expand",
                       ConvSpec{f, channels, 1, 1, 0, true, Activation::sigmoid});
  return a;
}

DecompGroup DecompGroup::build(ParamStore& ps, Rng& rng,
                               const std::string& path, int channels,
                               int depth) {
  DecompGroup g;
  g.label = leaf_of(path);
  int ch = channels;
  for (int b = 0; b < depth; ++b) {
    g.blocks.push_back(
        DecompBlock::build(ps, rng, path + ".block" + std::to_string(b), ch));
    ch /= 2;
  }
  // details sum to C - C/2^B; the final base contributes the remaining C/2^B
  g.attention = SpatialAttention::build(ps, rng, path + ".attn", channels);
  return g;
}

std::pair<FdanNetwork, ParamStore> build_fdan(const FdanConfig& config) {
  config.validate();
  FdanNetwork net;
  net.config = config;
  ParamStore ps;
  Rng rng(config.seed);

  const int C = config.channels;
  net.head = make_conv(ps, rng, "head",
                       ConvSpec{3, C, 3, 1, 1, true, Activation::relu});
  for (int g = 0; g < config.groups; ++g)
    net.groups.push_back(DecompGroup::build(
        ps, rng, "group" + std::to_string(g), C, config.blocks));
  if (config.aggregate)
    net.fuse_point = make_conv(
        ps, rng, "fuse.point",
        ConvSpec{config.groups * C, C, 1, 1, 0, true, Activation::relu});
  net.fuse_spread = make_conv(ps, rng, "fuse.spread",
                              ConvSpec{C, C, 3, 1, 1, true, Activation::relu});
  const int s2 = config.scale * config.scale;
  net.recon = make_conv(ps, rng, "recon",
                        ConvSpec{C, 3 * s2, 3, 1, 1, true, Activation::none});
  return {std::move(net), std::move(ps)};
}

}  // namespace fdan
