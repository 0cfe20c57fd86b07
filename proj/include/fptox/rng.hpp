#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace fptox {

// Deterministic RNG used wherever a seed appears in a public contract
// (splits, synthetic corpora, forest bootstraps). std::mt19937_64 has a
// standard-mandated output sequence; the bounded draw below avoids
// std::uniform_int_distribution, whose mapping is implementation-defined.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform draw in [0, n). Modulo bias is negligible for the small n used here.
    std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }

    // Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

// FNV-1a, used to derive per-label / per-category sub-seeds.
inline std::uint64_t hash64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& salt) {
    std::uint64_t h = hash64(salt);
    return seed ^ (h + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
}

}  // namespace fptox
