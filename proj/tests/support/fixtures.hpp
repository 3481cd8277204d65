#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lencon/data/corpus.hpp"
#include "lencon/model/params.hpp"

namespace lencon::testing {

inline ModelConfig tiny_config(Variant variant, std::size_t vocab = 8,
                               std::size_t hidden = 4, std::size_t embed = 4) {
  ModelConfig c;
  c.variant = variant;
  c.embed_dim = embed;
  c.hidden_dim = hidden;
  c.len_embed_dim = 3;
  c.length_types = 40;
  c.src_vocab = vocab;
  c.tgt_vocab = vocab;
  return c;
}

// Initialised with a wider range than training uses so that decoding
// distributions are far from uniform.
inline ModelParams random_model(const ModelConfig& config, std::uint64_t seed,
                                double range = 1.0) {
  ModelParams p = ModelParams::initialize(config, seed);
  std::mt19937_64 rng(seed * 7919 + 1);
  std::uniform_real_distribution<double> u(-range, range);
  for (Parameter* q : p.parameters()) {
    for (double& v : q->value.values()) v = u(rng);
  }
  return p;
}

inline std::vector<TokenId> random_ids(std::size_t n, std::size_t vocab,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<TokenId> pick(kReservedTokens,
                                              static_cast<TokenId>(vocab - 1));
  std::vector<TokenId> out(n);
  for (auto& t : out) t = pick(rng);
  return out;
}

inline EncodedPair random_pair(std::size_t src_len, std::size_t tgt_len,
                               std::size_t vocab, std::uint64_t seed) {
  EncodedPair p;
  p.source = random_ids(src_len, vocab, seed);
  p.target = random_ids(tgt_len, vocab, seed + 1);
  p.target_token_bytes.clear();
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < p.target.size(); ++i) {
    const std::size_t b = 2 + p.target[i] % 5;
    p.target_token_bytes.push_back(b);
    bytes += b + (i ? 1 : 0);
  }
  p.target.push_back(kEos);
  p.target_token_bytes.push_back(0);
  p.target_bytes = bytes;
  return p;
}

}  // namespace lencon::testing
