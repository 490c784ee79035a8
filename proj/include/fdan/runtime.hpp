#pragma once

namespace fdan::runtime {

// Worker count used by the parallel kernels. Defaults to 1 so results are
// reproducible unless the caller opts in; kernels are written so that any
// thread count produces bitwise-identical output anyway.
void set_thread_count(int n);
int thread_count();

}  // namespace fdan::runtime
