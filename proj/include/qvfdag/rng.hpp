#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qvfdag {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent stream seed from a master seed and a path of
/// stream identifiers (layer index, split index, node id, ...). The result
/// depends only on the arguments, never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t h = detail::splitmix64(master);
    for (auto id : path) {
        h = detail::splitmix64(h ^ detail::splitmix64(id + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path = {})
{
    return Rng{derive_seed(master, path)};
}

// Stream tags keep seed paths of different subsystems disjoint.
enum class Stream : std::uint64_t {
    graph = 1,
    params = 2,
    data = 3,
    stability = 4,
    cv_folds = 5,
    ratio_cv = 6,
};

constexpr std::uint64_t tag(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

}  // namespace qvfdag
