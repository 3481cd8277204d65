#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lencon/data/corpus.hpp"

namespace lencon {

struct ToyCorpusConfig {
  std::size_t vocab_size = 40;  // includes the three reserved tokens
  std::size_t min_source_len = 15;
  std::size_t max_source_len = 30;
  std::size_t min_budget = 10;
  std::size_t max_budget = 60;
  std::size_t size = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ToyCorpus {
  std::vector<std::string> lexicon;
  std::vector<SentenceSummaryPair> pairs;
  std::vector<std::size_t> budgets;
  // Pairs whose first source token alone exceeded the budget.
  std::vector<std::size_t> flagged;
};

// Content words of 2..8 ASCII bytes; depends only on vocab_size and seed.
std::vector<std::string> toy_lexicon(const ToyCorpusConfig& config);

// Each target is the longest source prefix whose rendered length fits a
// randomly drawn byte budget.
ToyCorpus gen_toy_corpus(const ToyCorpusConfig& config);

// Longest prefix of tokens with byte_length <= limit.
std::vector<std::string> longest_prefix_within(
    const std::vector<std::string>& tokens, std::size_t limit);

}  // namespace lencon
