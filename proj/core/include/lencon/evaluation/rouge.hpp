#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lencon {

using Tokens = std::vector<std::string>;

// Longest prefix whose space-joined byte length fits in `limit`.
Tokens truncate_bytes(std::span<const std::string> tokens, std::size_t limit);

// Recall with reference counts pooled over all references. Zero when no
// reference has an n-gram of that order.
double rouge_n(std::span<const std::string> candidate, std::span<const Tokens> references,
               std::size_t n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// LCS(c, r) / |r|, maximised over references.
double rouge_l(std::span<const std::string> candidate, std::span<const Tokens> references);

}  // namespace lencon
