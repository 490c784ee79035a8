#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "fdan/autograd.hpp"

namespace fdan {

// Compares reverse-mode gradients of a scalar-valued graph against central
// finite differences at every coordinate of x. build must be a pure function
// (Tape<T>&, Var) -> Var producing a scalar. Returns the max over coordinates
// of |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
template <typename T, typename BuildFn>
T finite_diff_check(BuildFn&& build, const TensorT<T>& x,
                    T eps = static_cast<T>(1e-3)) {
  Tape<T> tape;
  const Var in = tape.leaf(x, true);
  const Var out = build(tape, in);
  if (tape.value(out).size() != 1)
    throw InternalError("finite_diff_check: graph output must be scalar");
  tape.backward(out);
  const TensorT<T> gad = tape.grad(in);

  auto eval = [&](const TensorT<T>& point) -> T {
    Tape<T> t;
    const Var v = t.leaf(point, false);
    return t.value(build(t, v))[0];
  };

  T worst = 0;
  TensorT<T> probe = x;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const T orig = probe[i];
    probe[i] = orig + eps;
    const T fp = eval(probe);
    probe[i] = orig - eps;
    const T fm = eval(probe);
    probe[i] = orig;
    const T gfd = (fp - fm) / (2 * eps);
    const T denom = std::max({std::abs(gad[i]), std::abs(gfd),
                              static_cast<T>(1e-8)});
    worst = std::max(worst, std::abs(gad[i] - gfd) / denom);
  }
  return worst;
}

}  // namespace fdan
