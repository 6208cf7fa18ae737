#include "histodyn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace histodyn {
namespace {

std::atomic<unsigned> g_cap{0};

unsigned env_cap() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* s = std::getenv("HISTODYN_THREADS")) {
        try {
            long v = std::stol(s);
            if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
        } catch (...) {
        }
    }
    return hw;
}

}  // namespace

unsigned thread_cap() {
    unsigned c = g_cap.load();
    if (c == 0) {
        c = env_cap();
        g_cap.store(c);
    }
    return c;
}

void set_thread_cap(unsigned n) { g_cap.store(std::max(1u, n)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk) {
    unsigned width = thread_cap();
    if (width <= 1 || count < 2 * min_chunk) {
        if (count) fn(0, count);
        return;
    }
    std::size_t chunks = std::min<std::size_t>(width, count / min_chunk);
    std::size_t per = (count + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks - 1);
    for (std::size_t c = 1; c < chunks; ++c) {
        std::size_t b = c * per, e = std::min(count, b + per);
        if (b < e) pool.emplace_back(fn, b, e);
    }
    fn(0, std::min(count, per));
    for (auto& t : pool) t.join();
}

}  // namespace histodyn
