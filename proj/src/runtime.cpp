#include "fdan/runtime.hpp"

#include <atomic>

namespace fdan::runtime {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

int thread_count() { return g_threads.load(); }

}  // namespace fdan::runtime
