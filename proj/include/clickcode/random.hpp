#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace clickcode {

using Rng = std::mt19937_64;

/// Child seed for a named stage: splitmix64(root ^ fnv1a64(tag)).
/// Every random stream in the pipeline is obtained this way from the root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

/// First `count` entries of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

}  // namespace clickcode
