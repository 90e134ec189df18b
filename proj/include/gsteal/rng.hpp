#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace gsteal {

// PCG32 (XSH-RR output, 64-bit LCG state), the minimal generator from
// O'Neill's reference implementation. Every shuffle, sample and weight draw
// in this project goes through this class so that splits, synthetic data
// and trained parameters are reproducible bit-for-bit across platforms.
//
// Derived draws are fixed as follows (documented because they are part of
// the reproducibility contract; see README):
//   next_u64   : high 32 bits drawn first, then low 32 bits
//   uniform    : (next_u64() >> 11) * 2^-53, in [0, 1)
//   uniform_int: rejection sampling on next_u32, then modulo (no bias)
//   shuffle    : Fisher-Yates, i from n-1 down to 1, j = uniform_int(i+1)
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(0), inc_((stream << 1u) | 1u) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        return (hi << 32u) | lo;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
    }

    double uniform_range(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Unbiased integer in [0, bound); bound must be >= 1.
    std::uint32_t uniform_int(std::uint32_t bound) {
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i >= 1; --i) {
            std::size_t j = uniform_int(static_cast<std::uint32_t>(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

// Stream ids keep independent consumers off each other's sequences.
namespace rng_stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kMotif = 2;
inline constexpr std::uint64_t kWeightInit = 3;
inline constexpr std::uint64_t kTrainShuffle = 4;
inline constexpr std::uint64_t kAttack = 5;
}  // namespace rng_stream

}  // namespace gsteal
