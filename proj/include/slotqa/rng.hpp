#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace slotqa {

/// Deterministic RNG used for every sampled decision in the toolkit.
///
/// std::mt19937_64 output is pinned by the standard, but the standard
/// distributions are not, so bounded draws are implemented here directly.
/// Identical seeds therefore reproduce identical byte output on any
/// platform or compiler.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    /// Uniform draw in [0, n) via rejection sampling; n must be >= 1.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            uint64_t r = eng_();
            if (r >= threshold) return r % n;
        }
    }

  private:
    std::mt19937_64 eng_;
};

/// splitmix64 finalizer; used to derive well-separated child seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

/// Uniform sample of m indices out of [0, n) without replacement, returned
/// in draw order (partial Fisher-Yates). m > n returns all n in a shuffled
/// order.
inline std::vector<size_t> sample_indices(size_t n, size_t m, Rng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (m > n) m = n;
    for (size_t i = 0; i < m; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

}  // namespace slotqa
