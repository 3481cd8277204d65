#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace lencon {

enum class PermutationMode { automatic, exact, approximate };

inline constexpr std::size_t kExactPermutationLimit = 12;

// Two-sided paired permutation test on |mean(a) - mean(b)|. Exact mode
// enumerates all 2^n swaps (p = hits / 2^n); approximate mode swaps each pair
// with probability 1/2 per iteration and returns (1 + hits) / (1 + iterations).
// automatic picks exact for n <= 12.
double permutation_test(std::span<const double> a, std::span<const double> b,
                        std::size_t iterations, std::uint64_t seed,
                        PermutationMode mode = PermutationMode::automatic);

}  // namespace lencon
