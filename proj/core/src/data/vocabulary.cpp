#include "lencon/data/vocabulary.hpp"

#include <fstream>
#include <stdexcept>

namespace lencon {

bool is_reserved_token(std::string_view token) {
  return token == kBosToken || token == kEosToken || token == kUnkToken;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : {kBosToken, kEosToken, kUnkToken}) {
    index_.emplace(std::string(t), static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  if (token.empty()) throw std::invalid_argument("vocabulary: empty token");
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw std::out_of_range("vocabulary: id " + std::to_string(id) +
                            " out of range for size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::size_t> Vocabulary::token_bytes() const {
  std::vector<std::size_t> bytes;
  bytes.reserve(tokens_.size());
  for (const auto& t : tokens_) bytes.push_back(t.size());
  return bytes;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw std::runtime_error("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n < kReservedTokens) {
      if (line != vocab.tokens_[n]) {
        throw std::runtime_error("vocabulary " + path.string() +
                                 ": reserved token mismatch at line " +
                                 std::to_string(n + 1));
      }
    } else {
      if (vocab.contains(line)) {
        throw std::runtime_error("vocabulary " + path.string() +
                                 ": duplicate token at line " +
                                 std::to_string(n + 1));
      }
      vocab.add(line);
    }
    ++n;
  }
  if (n < kReservedTokens) {
    throw std::runtime_error("vocabulary " + path.string() + " is truncated");
  }
  return vocab;
}

}  // namespace lencon
