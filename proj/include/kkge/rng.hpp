#pragma once
// Counter-free splittable RNG. Every consumer opens its own stream keyed by
// (seed, purpose tag, index), so shuffling, initialization and noise sampling
// never share state and runs are reproducible across platforms.

#include <cstdint>
#include <string_view>
#include <vector>

namespace kkge {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace detail

// splitmix64 stream.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    // Independent stream for a (seed, tag, index) triple.
    static Rng stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
        std::uint64_t s = detail::fnv1a64(tag);
        s = detail::mix64(s ^ detail::mix64(seed + detail::kGolden));
        s = detail::mix64(s ^ detail::mix64(index + detail::kGolden));
        return Rng(s);
    }

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Unbiased integer in [0, n). Lemire's method with rejection.
    std::uint64_t next_below(std::uint64_t n) {
        while (true) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            auto lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (0ull - n) % n) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace kkge
