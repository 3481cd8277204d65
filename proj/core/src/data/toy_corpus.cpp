#include "lencon/data/toy_corpus.hpp"

#include <random>
#include <stdexcept>
#include <unordered_set>

namespace lencon {
namespace {

constexpr std::size_t kMinWordBytes = 2;
constexpr std::size_t kMaxWordBytes = 8;

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

void ToyCorpusConfig::validate() const {
  if (vocab_size <= kReservedTokens) {
    throw std::invalid_argument("toy corpus: vocab_size must exceed 3");
  }
  if (min_source_len == 0 || min_source_len > max_source_len) {
    throw std::invalid_argument("toy corpus: empty source length range");
  }
  if (min_budget > max_budget) {
    throw std::invalid_argument("toy corpus: empty budget range");
  }
  if (size == 0) throw std::invalid_argument("toy corpus: size must be positive");
}

std::vector<std::string> toy_lexicon(const ToyCorpusConfig& config) {
  if (config.vocab_size <= kReservedTokens) {
    throw std::invalid_argument("toy corpus: vocab_size must exceed 3");
  }
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t span = kMaxWordBytes - kMinWordBytes + 1;
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  const std::size_t count = config.vocab_size - kReservedTokens;
  while (words.size() < count) {
    const std::size_t len = kMinWordBytes + words.size() % span;
    std::string w(len, 'a');
    for (char& c : w) c = static_cast<char>('a' + uniform(rng, 0, 25));
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::vector<std::string> longest_prefix_within(
    const std::vector<std::string>& tokens, std::size_t limit) {
  std::vector<std::string> prefix;
  std::size_t bytes = 0;
  for (const auto& t : tokens) {
    const std::size_t next = bytes + t.size() + (prefix.empty() ? 0 : 1);
    if (next > limit) break;
    prefix.push_back(t);
    bytes = next;
  }
  return prefix;
}

ToyCorpus gen_toy_corpus(const ToyCorpusConfig& config) {
  config.validate();
  ToyCorpus corpus;
  corpus.lexicon = toy_lexicon(config);
  std::mt19937_64 rng(config.seed);
  corpus.pairs.reserve(config.size);
  corpus.budgets.reserve(config.size);
  for (std::size_t n = 0; n < config.size; ++n) {
    const std::size_t len =
        uniform(rng, config.min_source_len, config.max_source_len);
    std::vector<std::string> source;
    source.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      source.push_back(corpus.lexicon[uniform(rng, 0, corpus.lexicon.size() - 1)]);
    }
    const std::size_t budget = uniform(rng, config.min_budget, config.max_budget);
    auto target = longest_prefix_within(source, budget);
    if (target.empty()) {
      target.push_back(source.front());
      corpus.flagged.push_back(n);
    }
    corpus.budgets.push_back(budget);
    corpus.pairs.push_back(
        SentenceSummaryPair::make(std::move(source), std::move(target)));
  }
  return corpus;
}

}  // namespace lencon
