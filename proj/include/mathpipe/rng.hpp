#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mathpipe {

// splitmix64: tiny, fully specified generator so sampled outputs are
// bit-identical across platforms and standard libraries.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased uniform draw in [0, n) via rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

// First k indices of a seeded Fisher-Yates permutation of [0, n): a uniform
// sample without replacement, deterministic under seed.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, DetRng& rng);

}  // namespace mathpipe
