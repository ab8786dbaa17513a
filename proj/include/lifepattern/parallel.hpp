#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#include <omp.h>

namespace lifepattern {

/// Caps the worker count used by every parallel kernel. Results never depend
/// on it: work items are independent and reductions use fixed block order.
void set_thread_count(int n);
int thread_count();

/// Exceptions thrown by fn are collected and the one from the lowest index is
/// rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const auto count = static_cast<std::int64_t>(n);
  std::exception_ptr first;
  std::int64_t first_index = count;
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (count > 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(lifepattern_parallel_for)
      if (i < first_index) {
        first_index = i;
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

inline constexpr std::size_t kReduceBlock = 1024;

/// Sums fn(i) over [0, n) into an accumulator of `width` doubles. Each fixed
/// block is summed sequentially, then blocks are combined in index order.
template <class Fn>
std::vector<double> blocked_sum(std::size_t n, std::size_t width, Fn&& fn) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks * width, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    double* acc = partial.data() + b * width;
    const std::size_t end = std::min(n, (b + 1) * kReduceBlock);
    for (std::size_t i = b * kReduceBlock; i < end; ++i) fn(i, acc);
  });
  std::vector<double> total(width, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t w = 0; w < width; ++w) total[w] += partial[b * width + w];
  return total;
}

}  // namespace lifepattern
