#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "dice/linalg.hpp"

namespace dice {

using Rng = std::mt19937_64;

/// Seed for the named stream `stream` (and sub-index) under a root seed.
/// Distinct names give statistically independent streams, so one axis of an
/// experiment can change without perturbing the draws of another.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

/// n i.i.d. N(0, 1) draws.
Vec standard_normal(Rng& rng, std::size_t n);

}  // namespace dice
