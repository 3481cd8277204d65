#include "lencon/evaluation/rouge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace lencon {

Tokens truncate_bytes(std::span<const std::string> tokens, std::size_t limit) {
  Tokens out;
  std::size_t used = 0;
  for (const auto& t : tokens) {
    const std::size_t next = used + t.size() + (out.empty() ? 0 : 1);
    if (next > limit) break;
    out.push_back(t);
    used = next;
  }
  return out;
}

namespace {

using Counts = std::map<std::span<const std::string>, std::size_t,
                        decltype([](std::span<const std::string> a,
                                    std::span<const std::string> b) {
                          return std::lexicographical_compare(a.begin(), a.end(),
                                                              b.begin(), b.end());
                        })>;

Counts ngram_counts(std::span<const std::string> tokens, std::size_t n) {
  Counts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[tokens.subspan(i, n)];
  return counts;
}

}  // namespace

double rouge_n(std::span<const std::string> candidate, std::span<const Tokens> references,
               std::size_t n) {
  if (n == 0) throw std::invalid_argument("rouge_n: n must be >= 1");
  if (references.empty()) throw std::invalid_argument("rouge_n: no references");
  const Counts cand = ngram_counts(candidate, n);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& ref : references) {
    for (const auto& [gram, count] : ngram_counts(ref, n)) {
      total += count;
      const auto it = cand.find(gram);
      if (it != cand.end()) hits += std::min(count, it->second);
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> candidate, std::span<const Tokens> references) {
  if (references.empty()) throw std::invalid_argument("rouge_l: no references");
  double best = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    best = std::max(best, static_cast<double>(lcs_length(candidate, ref)) /
                              static_cast<double>(ref.size()));
  }
  return best;
}

}  // namespace lencon
