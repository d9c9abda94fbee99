#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace medsel {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a task seed from a master seed and the task's coordinates, so that
/// every parallel task draws from its own stream regardless of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

// Stream tags, kept distinct so derived seeds never collide across subsystems.
namespace stream {
inline constexpr std::uint64_t outer_folds = 1;
inline constexpr std::uint64_t inner_folds = 2;
inline constexpr std::uint64_t tuning = 3;
inline constexpr std::uint64_t bootstrap = 4;
inline constexpr std::uint64_t replication = 5;
inline constexpr std::uint64_t landmarks = 6;
inline constexpr std::uint64_t crossfit = 7;
}  // namespace stream

}  // namespace medsel
