#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fdan/model.hpp"

namespace fdan {

// One costed operation. Convolution rows carry params/macs/flops/activations
// (flops == 2 * macs exactly); elementwise rows (activations, adds, pooling,
// resize) carry one flop per output element; pure data movement (split,
// concat, pixel shuffle) contributes nothing and gets no row.
struct CostRow {
  std::string name;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t flops = 0;
  std::int64_t activations = 0;  // conv output elements
};

struct CostReport {
  int input_h = 0;
  int input_w = 0;
  int scale = 0;
  std::vector<CostRow> rows;

  std::int64_t total_params() const;
  std::int64_t total_macs() const;
  std::int64_t total_flops() const;
  std::int64_t total_activations() const;

  const CostRow* find(std::string_view name) const;

  void write_csv(std::ostream& os) const;
  std::string summary() const;
};

// Walks the model symbolically (shapes only) and accumulates per-layer cost.
// Uses the same forward wiring as inference and training, so the report can
// never drift from what the network actually computes.
struct ProfileCtx {
  using V = Shape;

  CostReport* report = nullptr;
  std::vector<std::string> stack;

  struct ScopeGuard {
    ProfileCtx* ctx;
    ScopeGuard(ProfileCtx* c, std::string_view s) : ctx(c) {
      ctx->stack.emplace_back(s);
    }
    ScopeGuard(const ScopeGuard&) = delete;
    ScopeGuard& operator=(const ScopeGuard&) = delete;
    ~ScopeGuard() { ctx->stack.pop_back(); }
  };

  ScopeGuard scope(std::string_view s) { return ScopeGuard(this, s); }
  Shape shape_of(const V& v) const { return v; }

  std::string path(std::string_view leaf) const;
  void elementwise_row(std::string_view op, std::int64_t elems);

  V conv(const ConvLayer& layer, const V& in);
  std::pair<V, V> channel_split(const V& x, int k);
  V channel_concat(const std::vector<V>& xs);
  V add(const V& a, const V& b);
  V sub(const V& a, const V& b);
  V mul(const V& a, const V& b);
  V pixel_shuffle(const V& x, int s);
  V max_pool(const V& x, int k, int stride);
  V bilinear_resize(const V& x, int oh, int ow);

 private:
  std::map<std::string, int> name_uses_;
  std::string unique_name(const std::string& base);
};

CostReport profile_model(const FdanNetwork& net, int input_h, int input_w);

std::int64_t count_params(const FdanNetwork& net);

struct FlopCounts {
  std::int64_t flops = 0;
  std::int64_t macs = 0;
};
FlopCounts count_flops(const FdanNetwork& net, int input_h, int input_w);

std::int64_t count_activations(const FdanNetwork& net, int input_h, int input_w);

// Native low-resolution frame for a given factor: a 3840x2160 source reduced
// by `scale` (e.g. 960x540 at scale 4).
std::pair<int, int> native_input_size(int scale);

}  // namespace fdan
