#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace teachsize {

// FNV-1a, used for content hashes and seed derivation.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seed derivation for per-task generators: mixes a base seed with any number
// of string/integer labels so parallel tasks stay reproducible regardless of
// execution order.
inline uint64_t derive_seed(uint64_t base) {
    return fnv1a64_u64(base, 0xcbf29ce484222325ull);
}

template <typename First, typename... Rest>
uint64_t derive_seed(uint64_t base, First&& first, Rest&&... rest) {
    uint64_t h = derive_seed(base);
    if constexpr (std::is_convertible_v<First, std::string_view>) {
        h = fnv1a64(std::string_view(first), h);
    } else {
        h = fnv1a64_u64(static_cast<uint64_t>(first), h);
    }
    if constexpr (sizeof...(rest) > 0) {
        return derive_seed(h, std::forward<Rest>(rest)...);
    }
    return h;
}

// mt19937_64 with hand-rolled bounded draws. The engine's output sequence is
// pinned by the standard; std::uniform_int_distribution is not, so byte-level
// reproducibility across toolchains requires doing the mapping ourselves.
class SplitRng {
public:
    explicit SplitRng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, bound) via rejection sampling.
    uint64_t below(uint64_t bound) {
        if (bound == 0) return 0;
        const uint64_t threshold = (-bound) % bound; // 2^64 mod bound
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace teachsize
