#pragma once

#include <cstdint>
#include <random>

namespace vqkan {

// splitmix64 step; used to derive independent sub-stream seeds from one
// experiment seed so dataset draws, parameter inits etc. never overlap.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded uniform generator. Doubles are produced from the top 53 bits of
// mt19937_64 output, so sequences are identical across standard libraries
// (std::uniform_real_distribution is not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace vqkan
