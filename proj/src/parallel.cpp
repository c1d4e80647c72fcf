#include "rqmc/parallel.hpp"

#include <atomic>

namespace rqmc {

namespace {
std::atomic<int> g_max_threads{0};
}

int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

void set_max_threads(int n) { g_max_threads.store(n, std::memory_order_relaxed); }

}  // namespace rqmc
