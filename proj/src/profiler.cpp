#include "fdan/profiler.hpp"

#include <cstdio>

namespace fdan {

std::int64_t CostReport::total_params() const {
  std::int64_t v = 0;
  for (const auto& r : rows) v += r.params;
  return v;
}
std::int64_t CostReport::total_macs() const {
  std::int64_t v = 0;
  for (const auto& r : rows) v += r.macs;
  return v;
}
std::int64_t CostReport::total_flops() const {
  std::int64_t v = 0;
  for (const auto& r : rows) v += r.flops;
  return v;
}
std::int64_t CostReport::total_activations() const {
  std::int64_t v = 0;
  for (const auto& r : rows) v += r.activations;
  return v;
}

const CostRow* CostReport::find(std::string_view name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

void CostReport::write_csv(std::ostream& os) const {
  os << "name,params,macs,flops,activations\n";
  for (const auto& r : rows)
    os << r.name << ',' << r.params << ',' << r.macs << ',' << r.flops << ','
       << r.activations << '\n';
  os << "TOTAL," << total_params() << ',' << total_macs() << ','
     << total_flops() << ',' << total_activations() << '\n';
}

std::string CostReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "input %dx%d scale %d: params %lld (%.2fK), macs %.2fG, "
                "flops %.2fG, activations %.2fG",
                input_w, input_h, scale,
                static_cast<long long>(total_params()),
                static_cast<double>(total_params()) / 1e3,
                static_cast<double>(total_macs()) / 1e9,
                static_cast<double>(total_flops()) / 1e9,
                static_cast<double>(total_activations()) / 1e9);
  return buf;
}

std::string ProfileCtx::path(std::string_view leaf) const {
  std::string p;
  for (const auto& s : stack) {
    p += s;
    p += '.';
  }
  p += leaf;
  return p;
}

std::string ProfileCtx::unique_name(const std::string& base) {
  const int uses = name_uses_[base]++;
  if (uses == 0) return base;
  return base + "#" + std::to_string(uses);
}

void ProfileCtx::elementwise_row(std::string_view op, std::int64_t elems) {
  CostRow row;
  row.name = unique_name(path(op));
  row.flops = elems;
  report->rows.push_back(std::move(row));
}

Shape ProfileCtx::conv(const ConvLayer& layer, const V& in) {
  const Shape out = layer.spec.out_shape(in);
  CostRow row;
  row.name = unique_name(path(layer.label));
  row.params = layer.spec.param_count();
  row.macs = out.elems() * layer.spec.macs_per_output();
  row.flops = 2 * row.macs;
  row.activations = out.elems();
  report->rows.push_back(std::move(row));
  if (layer.spec.activation != Activation::none)
    elementwise_row(std::string(layer.label) + "." +
                        to_string(layer.spec.activation),
                    out.elems());
  return out;
}

std::pair<Shape, Shape> ProfileCtx::channel_split(const V& x, int k) {
  if (k <= 0 || k >= x.c)
    throw ShapeError("channel_split: split point out of range");
  return {Shape{x.n, k, x.h, x.w}, Shape{x.n, x.c - k, x.h, x.w}};
}

Shape ProfileCtx::channel_concat(const std::vector<V>& xs) {
  if (xs.empty()) throw ArgumentError("channel_concat: empty input list");
  Shape out = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i].n != out.n || xs[i].h != out.h || xs[i].w != out.w)
      throw ShapeError("channel_concat: spatial/batch mismatch");
    out.c += xs[i].c;
  }
  return out;
}

Shape ProfileCtx::add(const V& a, const V& b) {
  if (a != b) throw ShapeError("add: shape mismatch");
  elementwise_row("add", a.elems());
  return a;
}
Shape ProfileCtx::sub(const V& a, const V& b) {
  if (a != b) throw ShapeError("sub: shape mismatch");
  elementwise_row("sub", a.elems());
  return a;
}
Shape ProfileCtx::mul(const V& a, const V& b) {
  if (a != b) throw ShapeError("mul: shape mismatch");
  elementwise_row("mul", a.elems());
  return a;
}

Shape ProfileCtx::pixel_shuffle(const V& x, int s) {
  if (x.c % (s * s) != 0)
    throw ShapeError("pixel_shuffle: channels not divisible by factor^2");
  return Shape{x.n, x.c / (s * s), x.h * s, x.w * s};
}

Shape ProfileCtx::max_pool(const V& x, int k, int stride) {
  if (x.h < k || x.w < k) throw ShapeError("max_pool: window larger than input");
  const Shape out{x.n, x.c, (x.h - k) / stride + 1, (x.w - k) / stride + 1};
  elementwise_row("pool", out.elems());
  return out;
}

Shape ProfileCtx::bilinear_resize(const V& x, int oh, int ow) {
  const Shape out{x.n, x.c, oh, ow};
  elementwise_row("resize", out.elems());
  return out;
}

CostReport profile_model(const FdanNetwork& net, int input_h, int input_w) {
  CostReport report;
  report.input_h = input_h;
  report.input_w = input_w;
  report.scale = net.config.scale;
  ProfileCtx ctx;
  ctx.report = &report;
  net.forward(ctx, Shape{1, 3, input_h, input_w});
  return report;
}

std::int64_t count_params(const FdanNetwork& net) {
  // Parameter count is resolution independent; walk at a small legal size.
  return profile_model(net, kMinSpatialInput, kMinSpatialInput).total_params();
}

FlopCounts count_flops(const FdanNetwork& net, int input_h, int input_w) {
  const CostReport r = profile_model(net, input_h, input_w);
  return FlopCounts{r.total_flops(), r.total_macs()};
}

std::int64_t count_activations(const FdanNetwork& net, int input_h, int input_w) {
  return profile_model(net, input_h, input_w).total_activations();
}

std::pair<int, int> native_input_size(int scale) {
  if (scale != 2 && scale != 4 && scale != 8 && scale != 16)
    throw ConfigError("native_input_size: scale must be one of {2, 4, 8, 16}");
  return {2160 / scale, 3840 / scale};  // (height, width)
}

}  // namespace fdan
