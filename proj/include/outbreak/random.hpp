#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace outbreak {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the stream identified by (master, a, b). Streams are independent of
/// evaluation order, which is what makes replicate generation worker-count invariant.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                                                  std::uint64_t b = 0) noexcept {
    return mix64(mix64(mix64(master) ^ (a * 0xd6e8feb86659fd93ULL)) ^ (b + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] inline Engine make_engine(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return Engine{stream_seed(master, a, b)};
}

/// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
[[nodiscard]] inline double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Poisson variate from uniform01 draws only, so streams reproduce across
/// platforms: inversion below mean 30, Hormann's PTRS rejection above.
[[nodiscard]] inline std::int64_t poisson_sample(double mean, Engine& engine) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        const double u = uniform01(engine);
        double p = std::exp(-mean), cdf = p;
        std::int64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    const double slam = std::sqrt(mean), loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam, a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4), vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform01(engine) - 0.5, v = uniform01(engine);
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0)) {
            return static_cast<std::int64_t>(k);
        }
    }
}

/// Fisher-Yates with uniform01-based index draws (portable, unlike std::shuffle).
template <typename T>
void portable_shuffle(std::vector<T>& values, Engine& engine) {
    for (std::size_t i = values.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform01(engine) * static_cast<double>(i));
        j = std::min(j, i - 1);
        std::swap(values[i - 1], values[j]);
    }
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads with static chunking.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t count = std::min<std::size_t>(workers, n);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += count) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace outbreak
