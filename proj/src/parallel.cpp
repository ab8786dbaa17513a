#include "lifepattern/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace lifepattern {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads = std::max(0, n); }

int thread_count() {
  const int n = g_threads.load();
  return n > 0 ? n : omp_get_max_threads();
}

}  // namespace lifepattern
