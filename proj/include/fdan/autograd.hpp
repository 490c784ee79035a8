#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fdan/kernels.hpp"

namespace fdan {

// Handle into a Tape. Invalid handles (id < 0) stand for "no tensor", e.g. a
// bias-free conv.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape at tensor granularity. Every op records its output as a
// new node whose backward closure scatters gradient to the parents; nodes are
// created in evaluation order, so walking the tape backwards is already a
// topological order. Gradients accumulate across fan-out.
template <typename T>
class Tape {
 public:
  using Ten = TensorT<T>;

  Var leaf(Ten value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const Ten& value(Var v) const { return node(v).value; }

  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // Gradient of the last backward() target w.r.t. v; zeros if v never
  // received gradient (e.g. disconnected from the output).
  Ten grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.empty()) return Ten(n.value.shape());
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // --- ops ---

  Var conv(const ConvSpec& spec, Var w, Var b, Var x) {
    const Ten* bt = b.valid() ? &value(b) : nullptr;
    Ten y = kernels::conv2d(value(x), spec, value(w), bt);
    const bool rg = requires_grad(x) || requires_grad(w) ||
                    (b.valid() && requires_grad(b));
    const int xid = x.id, wid = w.id, bid = b.id;
    return record(std::move(y), rg, [xid, wid, bid, spec](Tape& t, int yid) {
      const Ten gz = kernels::activation_backward(
          spec.activation, t.nodes_[yid].value, t.nodes_[yid].grad);
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid, kernels::conv2d_grad_input(
                            gz, spec, t.nodes_[wid].value,
                            t.nodes_[xid].value.shape()));
      if (t.nodes_[wid].requires_grad)
        t.add_grad(wid, kernels::conv2d_grad_weight(gz, spec,
                                                    t.nodes_[xid].value));
      if (bid >= 0 && t.nodes_[bid].requires_grad)
        t.add_grad(bid, kernels::conv2d_grad_bias(gz));
    });
  }

  Var slice_channels(Var x, int c0, int c1) {
    Ten y = kernels::slice_channels(value(x), c0, c1);
    const int xid = x.id;
    return record(std::move(y), requires_grad(x),
                  [xid, c0](Tape& t, int yid) {
                    if (!t.nodes_[xid].requires_grad) return;
                    Ten gx(t.nodes_[xid].value.shape());
                    kernels::add_into_channels(gx, t.nodes_[yid].grad, c0);
                    t.add_grad(xid, std::move(gx));
                  });
  }

  std::pair<Var, Var> channel_split(Var x, int k) {
    const int c = value(x).shape().c;
    if (k <= 0 || k >= c)
      throw ShapeError("channel_split: split point " + std::to_string(k) +
                       " outside (0," + std::to_string(c) + ")");
    return {slice_channels(x, 0, k), slice_channels(x, k, c)};
  }

  Var channel_concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw ArgumentError("channel_concat: empty input list");
    std::vector<const Ten*> vals;
    bool rg = false;
    std::vector<int> ids;
    for (Var v : xs) {
      vals.push_back(&value(v));
      rg = rg || requires_grad(v);
      ids.push_back(v.id);
    }
    Ten y = kernels::channel_concat(vals);
    return record(std::move(y), rg, [ids](Tape& t, int yid) {
      int c0 = 0;
      for (int id : ids) {
        const int ck = t.nodes_[id].value.shape().c;
        if (t.nodes_[id].requires_grad)
          t.add_grad(id,
                     kernels::slice_channels(t.nodes_[yid].grad, c0, c0 + ck));
        c0 += ck;
      }
    });
  }

  Var pixel_shuffle(Var x, int s) {
    Ten y = kernels::pixel_shuffle(value(x), s);
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid, s](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid, kernels::pixel_unshuffle(t.nodes_[yid].grad, s));
    });
  }

  Var max_pool(Var x, int k, int stride) {
    std::vector<std::int64_t> argmax;
    Ten y = kernels::max_pool(value(x), k, stride, &argmax);
    const int xid = x.id;
    return record(std::move(y), requires_grad(x),
                  [xid, argmax = std::move(argmax)](Tape& t, int yid) {
                    if (!t.nodes_[xid].requires_grad) return;
                    t.add_grad(xid, kernels::max_pool_backward(
                                        t.nodes_[yid].grad, argmax,
                                        t.nodes_[xid].value.shape()));
                  });
  }

  Var bilinear_resize(Var x, int oh, int ow) {
    Ten y = kernels::bilinear_resize(value(x), oh, ow);
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid, kernels::bilinear_resize_backward(
                            t.nodes_[yid].grad,
                            t.nodes_[xid].value.shape()));
    });
  }

  Var add(Var a, Var b) {
    Ten y = kernels::add(value(a), value(b));
    const int aid = a.id, bid = b.id;
    return record(std::move(y), requires_grad(a) || requires_grad(b),
                  [aid, bid](Tape& t, int yid) {
                    if (t.nodes_[aid].requires_grad)
                      t.add_grad(aid, Ten(t.nodes_[yid].grad));
                    if (t.nodes_[bid].requires_grad)
                      t.add_grad(bid, Ten(t.nodes_[yid].grad));
                  });
  }

  Var sub(Var a, Var b) {
    Ten y = kernels::sub(value(a), value(b));
    const int aid = a.id, bid = b.id;
    return record(std::move(y), requires_grad(a) || requires_grad(b),
                  [aid, bid](Tape& t, int yid) {
                    if (t.nodes_[aid].requires_grad)
                      t.add_grad(aid, Ten(t.nodes_[yid].grad));
                    if (t.nodes_[bid].requires_grad)
                      t.add_grad(bid, kernels::scale(t.nodes_[yid].grad, T(-1)));
                  });
  }

  Var mul(Var a, Var b) {
    Ten y = kernels::mul(value(a), value(b));
    const int aid = a.id, bid = b.id;
    return record(std::move(y), requires_grad(a) || requires_grad(b),
                  [aid, bid](Tape& t, int yid) {
                    const Ten& gy = t.nodes_[yid].grad;
                    if (t.nodes_[aid].requires_grad)
                      t.add_grad(aid, kernels::mul(gy, t.nodes_[bid].value));
                    if (t.nodes_[bid].requires_grad)
                      t.add_grad(bid, kernels::mul(gy, t.nodes_[aid].value));
                  });
  }

  Var relu(Var x) {
    Ten y = kernels::relu(value(x));
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid,
                   kernels::activation_backward(Activation::relu,
                                                t.nodes_[yid].value,
                                                t.nodes_[yid].grad));
    });
  }

  Var sigmoid(Var x) {
    Ten y = kernels::sigmoid(value(x));
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid,
                   kernels::activation_backward(Activation::sigmoid,
                                                t.nodes_[yid].value,
                                                t.nodes_[yid].grad));
    });
  }

  Var scale(Var x, T a) {
    Ten y = kernels::scale(value(x), a);
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid, a](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid, kernels::scale(t.nodes_[yid].grad, a));
    });
  }

  Var sum(Var x) {
    Ten y(Shape{1, 1, 1, 1});
    y[0] = kernels::sum(value(x));
    const int xid = x.id;
    return record(std::move(y), requires_grad(x), [xid](Tape& t, int yid) {
      if (t.nodes_[xid].requires_grad)
        t.add_grad(xid, Ten::full(t.nodes_[xid].value.shape(),
                                  t.nodes_[yid].grad[0]));
    });
  }

  Var l1_loss(Var pred, Var target) {
    Ten y(Shape{1, 1, 1, 1});
    y[0] = kernels::mean_abs_diff(value(pred), value(target));
    const int pid = pred.id, tid = target.id;
    return record(std::move(y), requires_grad(pred) || requires_grad(target),
                  [pid, tid](Tape& t, int yid) {
                    const T coef = t.nodes_[yid].grad[0] /
                                   static_cast<T>(t.nodes_[pid].value.size());
                    if (t.nodes_[pid].requires_grad)
                      t.add_grad(pid, kernels::l1_backward(
                                          t.nodes_[pid].value,
                                          t.nodes_[tid].value, coef));
                    if (t.nodes_[tid].requires_grad)
                      t.add_grad(tid, kernels::l1_backward(
                                          t.nodes_[tid].value,
                                          t.nodes_[pid].value, coef));
                  });
  }

  // Seeds d(out)/d(out) = 1 and sweeps the tape in reverse creation order.
  void backward(Var out) {
    Node& o = node_mut(out);
    if (o.value.size() != 1)
      throw InternalError("backward: target must be scalar, got " +
                          to_string(o.value.shape()));
    if (!o.requires_grad)
      throw InternalError("backward: target does not require gradient");
    o.grad = Ten::full(o.value.shape(), T(1));
    for (int i = out.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back && !n.grad.empty()) n.back(*this, i);
    }
  }

 private:
  struct Node {
    Ten value;
    Ten grad;  // empty until first accumulation
    bool requires_grad = false;
    std::function<void(Tape&, int)> back;  // null for leaves
  };

  const Node& node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw InternalError("tape: invalid variable handle");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  Node& node_mut(Var v) { return const_cast<Node&>(node(v)); }

  Var push(Ten v, bool rg, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(v), Ten{}, rg, std::move(back)});
    return {static_cast<int>(nodes_.size()) - 1};
  }

  template <typename F>
  Var record(Ten y, bool rg, F back) {
    if (!rg) return push(std::move(y), false, nullptr);
    return push(std::move(y), true, std::function<void(Tape&, int)>(back));
  }

  void add_grad(int id, Ten g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (g.shape() != n.value.shape())
      throw InternalError("tape: gradient shape mismatch at node " +
                          std::to_string(id));
    if (n.grad.empty()) {
      n.grad = std::move(g);
    } else {
      T* d = n.grad.data();
      const T* s = g.data();
      for (std::int64_t i = 0; i < g.size(); ++i) d[i] += s[i];
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace fdan
