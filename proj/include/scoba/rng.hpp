#pragma once

#include <cstdint>
#include <random>

namespace scoba {

// Trial reproducibility rests on substream derivation: every consumer of
// randomness gets its own generator seeded from (base seed, trial index,
// stream id) so that e.g. task generation is identical across planners
// while execution noise stays independent.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t trial,
                                    std::uint64_t stream) {
    std::uint64_t s = splitmix64(base ^ 0x51c64b3256d5f0d1ULL);
    s = splitmix64(s ^ (trial + 0x1000003ULL));
    s = splitmix64(s ^ (stream * 0x9e3779b97f4a7c15ULL + 1ULL));
    return s;
}

using Rng = std::mt19937_64;

// Stream ids used by the harness.
enum : std::uint64_t {
    kStreamGeneration = 0,  // task arrivals; shared across planners
    kStreamExecution = 1,   // grasp/travel outcomes
    kStreamPlanner = 2,     // planner-internal sampling (MCTS)
};

inline Rng make_rng(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
    return Rng(substream_seed(base, trial, stream));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace scoba
