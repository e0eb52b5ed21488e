#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "enp/math/normal.hpp"

namespace enp {

/// Counter-based uniform stream: output i of stream s under seed k is a pure
/// function of (k, s, i), so chunked generation is bit-identical no matter
/// how chunks are scheduled across threads. The kernel is splitmix64 applied
/// to a per-stream key.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(mix(seed + 0x9e3779b97f4a7c15ull) ^ mix(stream + 0xbf58476d1ce4e5b9ull))),
          counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + 0x9e3779b97f4a7c15ull * ++counter_;
        return mix(z);
    }

    /// Uniform double in the open interval (0,1).
    double next_uniform() {
        // 53 mantissa bits, shifted off zero so inverse-CDF transforms stay finite.
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse CDF (deterministic, no rejection state).
    double next_normal() { return math::normal_quantile(next_uniform()); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

/// Runs fn(chunk_index) for chunk_index in [0, n_chunks) on up to `jobs`
/// threads. Chunks own disjoint state, so the result is independent of the
/// thread count.
inline void parallel_chunks(int jobs, std::size_t n_chunks,
                            const std::function<void(std::size_t)>& fn) {
    if (jobs < 1) jobs = 1;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) fn(c);
        });
    }
    for (auto& t : pool) t.join();
}

/// Default worker count: ENP_JOBS env var if set, else hardware concurrency.
inline int default_jobs() {
    if (const char* env = std::getenv("ENP_JOBS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

}  // namespace enp
