#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace poisonlab {

/// Number of work chunks used by batch-level parallelism. Fixed so that
/// floating-point reduction order never depends on the machine's core count.
inline constexpr std::size_t kParallelChunks = 8;

/// Runs fn(chunk_index, begin, end) for kParallelChunks contiguous slices of
/// [0, n). Chunks execute on their own threads; the caller combines chunk
/// results in chunk order afterwards, which keeps reductions deterministic.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const std::size_t chunks = kParallelChunks;
    const std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * per;
        if (begin >= n) break;
        const std::size_t end = std::min(n, begin + per);
        workers.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    }
    for (auto& w : workers) w.join();
}

} // namespace poisonlab
