#pragma once

#include <cstddef>
#include <functional>

namespace histodyn {

// Width cap from HISTODYN_THREADS (default: hardware concurrency, at least 1).
unsigned thread_cap();
void set_thread_cap(unsigned n);

// Runs fn(begin, end) over disjoint chunks of [0, count). Small ranges run inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk = 1 << 14);

}  // namespace histodyn
