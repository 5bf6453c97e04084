#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

// Seed derivation for reproducible, independent random streams. Every
// stochastic quantity in a run is drawn from an engine seeded through
// substream_seed(master, tags...), so a single master seed fixes the
// whole experiment.

namespace uavsched::rnd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t));
    return s;
}

inline std::mt19937_64 engine(std::uint64_t master,
                              std::initializer_list<std::uint64_t> tags = {}) {
    return std::mt19937_64(substream_seed(master, tags));
}

}  // namespace uavsched::rnd
