#pragma once
// Seeded random streams with explicit splitting. All sampling goes through
// this header instead of <random> distributions, whose output sequences are
// implementation-defined; results must be identical across platforms and
// across any parallel execution order.

#include <cstdint>
#include <random>
#include <vector>

#include "rcause/errors.hpp"

namespace rcause {

// SplitMix64 finalizer; also used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x6a09e667f3bcc909ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

// A single sequential random stream. mt19937_64 has a standard-fixed output
// sequence, so streams are reproducible everywhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, n) by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw internal_error("uniform_index over empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Categorical draw by CDF walk; probs need not be exactly normalized.
    std::size_t categorical(const std::vector<double>& probs) {
        double u = uniform_double();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        // Guard against accumulated rounding: fall back to the last
        // positive-mass entry.
        for (std::size_t i = probs.size(); i-- > 0;) {
            if (probs[i] > 0.0) return i;
        }
        throw internal_error("categorical draw over zero-mass distribution");
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rcause
