#include "dc/parallel.hpp"

#include <atomic>

namespace dc {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

}  // namespace dc
