// Times the parallel compute kernels against the serial reference versions
// and cross-checks their outputs while at it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "fdan/kernels.hpp"
#include "fdan/kernels_ref.hpp"
#include "fdan/rng.hpp"
#include "fdan/runtime.hpp"

using fdan::ConvSpec;
using fdan::Rng;
using fdan::Tensor;

namespace {

Tensor random_tensor(const fdan::Shape& s, Rng& rng) {
  Tensor t(s);
  for (std::int64_t i = 0; i < t.size(); ++i)
    t[i] = rng.next_float() - 0.5f;
  return t;
}

template <typename Fn>
double time_ms(Fn&& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

}  // namespace

int main() {
  Rng rng(1234);
  const ConvSpec spec{48, 48, 3, 1, 1, true, fdan::Activation::relu};
  const Tensor x = random_tensor({1, 48, 128, 128}, rng);
  const Tensor w = random_tensor(spec.weight_shape(), rng);
  const Tensor b = random_tensor(spec.bias_shape(), rng);
  const Tensor gz = random_tensor(spec.out_shape(x.shape()), rng);
  const int reps = 3;

  fdan::runtime::set_thread_count(1);
  const Tensor ref_fwd = fdan::ref::conv2d(x, spec, w, &b);
  const Tensor ref_gi = fdan::ref::conv2d_grad_input(gz, spec, w, x.shape());
  const Tensor ref_gw = fdan::ref::conv2d_grad_weight(gz, spec, x);

  const double t_ref_fwd = time_ms([&] { fdan::ref::conv2d(x, spec, w, &b); }, reps);
  const double t_ref_gi = time_ms(
      [&] { fdan::ref::conv2d_grad_input(gz, spec, w, x.shape()); }, reps);
  const double t_ref_gw =
      time_ms([&] { fdan::ref::conv2d_grad_weight(gz, spec, x); }, reps);

  std::printf("conv 48x48 3x3 on 128x128, %d reps\n", reps);
  std::printf("%-14s %10s %12s %12s %10s\n", "kernel", "threads", "ms",
              "speedup", "max|diff|");
  std::printf("%-14s %10s %12.2f %12s %10s\n", "forward", "ref", t_ref_fwd,
              "1.00", "-");

  for (int threads : {1, 2, 4}) {
    fdan::runtime::set_thread_count(threads);
    const Tensor y = fdan::kernels::conv2d(x, spec, w, &b);
    const double t = time_ms([&] { fdan::kernels::conv2d(x, spec, w, &b); }, reps);
    std::printf("%-14s %10d %12.2f %12.2f %10.2e\n", "forward", threads, t,
                t_ref_fwd / t, max_abs_diff(y, ref_fwd));
  }
  std::printf("%-14s %10s %12.2f %12s %10s\n", "grad_input", "ref", t_ref_gi,
              "1.00", "-");
  for (int threads : {1, 2, 4}) {
    fdan::runtime::set_thread_count(threads);
    const Tensor gi = fdan::kernels::conv2d_grad_input(gz, spec, w, x.shape());
    const double t = time_ms(
        [&] { fdan::kernels::conv2d_grad_input(gz, spec, w, x.shape()); }, reps);
    std::printf("%-14s %10d %12.2f %12.2f %10.2e\n", "grad_input", threads, t,
                t_ref_gi / t, max_abs_diff(gi, ref_gi));
  }
  std::printf("%-14s %10s %12.2f %12s %10s\n", "grad_weight", "ref", t_ref_gw,
              "1.00", "-");
  for (int threads : {1, 2, 4}) {
    fdan::runtime::set_thread_count(threads);
    const Tensor gw = fdan::kernels::conv2d_grad_weight(gz, spec, x);
    const double t =
        time_ms([&] { fdan::kernels::conv2d_grad_weight(gz, spec, x); }, reps);
    std::printf("%-14s %10d %12.2f %12.2f %10.2e\n", "grad_weight", threads, t,
                t_ref_gw / t, max_abs_diff(gw, ref_gw));
  }
  return 0;
}
