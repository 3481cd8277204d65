#include "lencon/evaluation/significance.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lencon {

namespace {
constexpr double kTieSlack = 1e-12;
}

double permutation_test(std::span<const double> a, std::span<const double> b,
                        std::size_t iterations, std::uint64_t seed,
                        PermutationMode mode) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("permutation_test: score lists differ in length (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("permutation_test: no documents");
  if (mode == PermutationMode::automatic) {
    mode = n <= kExactPermutationLimit ? PermutationMode::exact
                                       : PermutationMode::approximate;
  }
  if (mode == PermutationMode::exact && n > 24) {
    throw std::invalid_argument("permutation_test: exact mode limited to 24 documents");
  }
  if (mode == PermutationMode::approximate && iterations == 0) {
    throw std::invalid_argument("permutation_test: iterations must be positive");
  }

  // Swapping pair i negates its difference, so work with d_i = a_i - b_i.
  std::vector<double> d(n);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    observed += d[i];
  }
  const double scale = 1.0 / static_cast<double>(n);
  observed = std::abs(observed) * scale;
  const double threshold = observed - kTieSlack;

  std::size_t hits = 0;
  if (mode == PermutationMode::exact) {
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? -d[i] : d[i];
      if (std::abs(s) * scale >= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(patterns);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t it = 0; it < iterations; ++it) {
    double s = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng();
      s += (bits & 1) ? -d[i] : d[i];
      bits >>= 1;
    }
    if (std::abs(s) * scale >= threshold) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + iterations);
}

}  // namespace lencon
