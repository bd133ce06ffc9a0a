#include "fsl/common/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace fsl::rng {

std::uint64_t derive(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (const auto p : parts) {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t uniform_index(Engine& eng, std::size_t n) {
    const auto range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = eng();
    while (x >= limit) {
        x = eng();
    }
    return static_cast<std::size_t>(x % range);
}

double normal(Engine& eng) {
    double u1 = uniform01(eng);
    while (u1 <= 0.0) {
        u1 = uniform01(eng);
    }
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> sample_without_replacement(Engine& eng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (k > n) {
        k = n;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(eng, n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace fsl::rng
