#pragma once

#include <cstdint>
#include <random>

namespace fockctl {

/// Deterministic RNG stream derived from a run seed plus stream indices.
/// Distinct (seed, a, b) tuples give statistically independent streams, so
/// trajectories and workers can be seeded reproducibly regardless of
/// scheduling order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a = 0,
                                   std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),
                      static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// Standard-normal draw. Wrapper so every call site uses the same
/// generator-to-distribution mapping.
double standard_normal(std::mt19937_64& rng);

}  // namespace fockctl
