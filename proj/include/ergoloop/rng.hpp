#pragma once

#include <cstdint>
#include <random>

namespace ergoloop {

/// SplitMix64 finalizer; used to derive well-mixed seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Deterministic uniform source. Draws map the top 53 bits of an mt19937_64
/// output onto [0,1), so streams are bit-identical across platforms.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Independent stream for realization `rep` of initial condition `ic`.
inline RandomStream make_stream(std::uint64_t master_seed, std::uint64_t ic, std::uint64_t rep) {
    return RandomStream(mix_seed(mix_seed(splitmix64(master_seed), ic), rep));
}

} // namespace ergoloop
