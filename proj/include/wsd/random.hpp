#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace wsd {

/// 64-bit FNV-1a over a byte string. Used wherever a stable, platform-independent
/// hash is needed (seed derivation, cache keys must NOT use std::hash).
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t state = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

/// Derives an independent RNG seed from a base seed plus context strings.
/// The base seed is folded in as 8 little-endian bytes; parts are separated by
/// 0x1f so ("ab","c") and ("a","bc") cannot collide.
inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::initializer_list<std::string_view> parts) {
    char seed_bytes[8];
    for (int i = 0; i < 8; ++i) {
        seed_bytes[i] = static_cast<char>((base_seed >> (8 * i)) & 0xff);
    }
    std::uint64_t h = fnv1a64(std::string_view(seed_bytes, 8));
    for (std::string_view part : parts) {
        h = fnv1a64("\x1f", h);
        h = fnv1a64(part, h);
    }
    return h;
}

/// Deterministic RNG with portable bounded draws. mt19937_64 output is
/// bit-exact by the standard; the bounded draw and the partial Fisher-Yates
/// below avoid std::uniform_int_distribution / std::shuffle, whose results
/// are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Unbiased draw from [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform draw of k distinct indices from [0, n), in draw order.
    /// Partial Fisher-Yates; k must be <= n.
    std::vector<std::size_t> sample_indices(std::size_t k, std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace wsd
