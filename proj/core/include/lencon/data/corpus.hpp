#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lencon/data/vocabulary.hpp"

namespace lencon {

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& message,
              const std::string& file = "");
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

bool is_valid_utf8(std::string_view text);
std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

// Rendered length of space-joined tokens: sum of UTF-8 bytes plus one byte per
// separator.
std::size_t byte_length(std::span<const std::string> tokens);

struct SentenceSummaryPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::size_t target_bytes = 0;

  static SentenceSummaryPair make(std::vector<std::string> source,
                                  std::vector<std::string> target);
  bool operator==(const SentenceSummaryPair&) const = default;
};

struct LoadedCorpus {
  std::vector<SentenceSummaryPair> pairs;
  std::vector<std::string> warnings;
};

// One `source<TAB>target` pair per line, tokens separated by spaces.
LoadedCorpus parse_corpus(std::istream& in);
LoadedCorpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, std::span<const SentenceSummaryPair> pairs);
void save_corpus(const std::filesystem::path& path,
                 std::span<const SentenceSummaryPair> pairs);

// Separate source and target vocabularies, each ordered by descending
// frequency (ties lexicographic) and truncated to max sizes that include the
// three reserved tokens.
std::pair<Vocabulary, Vocabulary> build_vocab(
    std::span<const SentenceSummaryPair> pairs, std::size_t max_src,
    std::size_t max_tgt);

// A pair in id space. `target` ends with EOS; target_token_bytes holds the
// byte length of each original target word (so UNK still costs its word).
struct EncodedPair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  std::vector<std::size_t> target_token_bytes;
  std::size_t target_bytes = 0;
};

EncodedPair encode_pair(const SentenceSummaryPair& pair, const Vocabulary& src,
                        const Vocabulary& tgt);
std::vector<EncodedPair> encode_corpus(std::span<const SentenceSummaryPair> pairs,
                                       const Vocabulary& src,
                                       const Vocabulary& tgt);

}  // namespace lencon
