#include "lencon/data/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace lencon {

CorpusError::CorpusError(std::size_t line, const std::string& message,
                         const std::string& file)
    : std::runtime_error((file.empty() ? "" : file + ": ") + "line " +
                         std::to_string(line) + ": " + message),
      line_(line),
      message_(message) {}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::size_t byte_length(std::span<const std::string> tokens) {
  std::size_t total = 0;
  for (const auto& t : tokens) total += t.size();
  if (!tokens.empty()) total += tokens.size() - 1;
  return total;
}

SentenceSummaryPair SentenceSummaryPair::make(std::vector<std::string> source,
                                              std::vector<std::string> target) {
  SentenceSummaryPair pair;
  pair.source = std::move(source);
  pair.target = std::move(target);
  pair.target_bytes = byte_length(pair.target);
  return pair;
}

LoadedCorpus parse_corpus(std::istream& in) {
  LoadedCorpus corpus;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      corpus.warnings.push_back("line " + std::to_string(number) +
                                ": blank line skipped");
      continue;
    }
    if (!is_valid_utf8(line)) throw CorpusError(number, "invalid UTF-8");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw CorpusError(number, "missing TAB between source and target");
    }
    if (line.find('\t', tab + 1) != std::string::npos) {
      throw CorpusError(number, "more than one TAB");
    }
    auto source = split_tokens(std::string_view(line).substr(0, tab));
    auto target = split_tokens(std::string_view(line).substr(tab + 1));
    if (source.empty()) throw CorpusError(number, "empty source side");
    if (target.empty()) throw CorpusError(number, "empty target side");
    corpus.pairs.push_back(
        SentenceSummaryPair::make(std::move(source), std::move(target)));
  }
  return corpus;
}

LoadedCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read corpus " + path.string());
  try {
    return parse_corpus(in);
  } catch (const CorpusError& e) {
    throw CorpusError(e.line(), e.message(), path.string());
  }
}

void write_corpus(std::ostream& out, std::span<const SentenceSummaryPair> pairs) {
  for (const auto& p : pairs) {
    out << join_tokens(p.source) << '\t' << join_tokens(p.target) << '\n';
  }
}

void save_corpus(const std::filesystem::path& path,
                 std::span<const SentenceSummaryPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus " + path.string());
  write_corpus(out, pairs);
  if (!out) throw std::runtime_error("failed writing corpus " + path.string());
}

namespace {

Vocabulary vocab_from_counts(const std::map<std::string, std::size_t>& counts,
                             std::size_t max_size) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  // std::map iteration is lexicographic, so a stable sort keeps ties in order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.add(token);
  }
  return vocab;
}

}  // namespace

std::pair<Vocabulary, Vocabulary> build_vocab(
    std::span<const SentenceSummaryPair> pairs, std::size_t max_src,
    std::size_t max_tgt) {
  if (pairs.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> src_counts;
  std::map<std::string, std::size_t> tgt_counts;
  for (const auto& p : pairs) {
    for (const auto& t : p.source) {
      if (!is_reserved_token(t)) ++src_counts[t];
    }
    for (const auto& t : p.target) {
      if (!is_reserved_token(t)) ++tgt_counts[t];
    }
  }
  return {vocab_from_counts(src_counts, max_src),
          vocab_from_counts(tgt_counts, max_tgt)};
}

EncodedPair encode_pair(const SentenceSummaryPair& pair, const Vocabulary& src,
                        const Vocabulary& tgt) {
  EncodedPair e;
  e.source = src.encode(pair.source);
  e.target = tgt.encode(pair.target);
  e.target.push_back(kEos);
  for (const auto& t : pair.target) e.target_token_bytes.push_back(t.size());
  e.target_token_bytes.push_back(0);
  e.target_bytes = pair.target_bytes;
  return e;
}

std::vector<EncodedPair> encode_corpus(std::span<const SentenceSummaryPair> pairs,
                                       const Vocabulary& src,
                                       const Vocabulary& tgt) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_pair(p, src, tgt));
  return out;
}

}  // namespace lencon
