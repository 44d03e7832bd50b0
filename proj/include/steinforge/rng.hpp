#pragma once

// Counter-based pseudo-random stream. Draw i of stream s under seed k is a
// pure function of (k, s, i), so replications can be handed out to threads in
// any order and still reproduce bit-identically across platforms.

#include <cstdint>

#include "steinforge/special.hpp"

namespace steinforge {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(detail::mix64(detail::mix64(seed) ^ (0x6a09e667f3bcc909ull + stream))) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ull); }

    // Uniform draw in the open interval (0, 1).
    double next_uniform() {
        return double(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double next_normal() { return norm_quantile(next_uniform()); }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace steinforge
