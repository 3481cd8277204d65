#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>

#include "fixtures.hpp"
#include "lencon/decoding/beam_search.hpp"
#include "lencon/model/network.hpp"

using namespace lencon;
using lencon::testing::random_ids;
using lencon::testing::random_model;
using lencon::testing::tiny_config;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Scored {
  std::vector<TokenId> tokens;  // content only
  double logprob = kNegInf;
};

std::size_t render_bytes(std::span<const TokenId> tokens, std::span<const std::size_t> bytes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) n += bytes[tokens[i]] + (i ? 1 : 0);
  return n;
}

double full_logprob(const ModelParams& p, std::span<const TokenId> source,
                    std::vector<TokenId> content, std::span<const std::size_t> bytes,
                    std::optional<std::size_t> desired) {
  std::vector<std::size_t> tb;
  for (TokenId t : content) tb.push_back(bytes[t]);
  content.push_back(kEos);
  tb.push_back(0);
  return sequence_logprob(p, source, content, tb, desired);
}

// Enumerates every content sequence over the non-reserved-start tokens
// (UNK included) up to max_len tokens.
void enumerate(std::size_t vocab, std::size_t max_len,
               const std::function<void(const std::vector<TokenId>&)>& visit) {
  std::vector<TokenId> cur;
  std::function<void()> rec = [&] {
    visit(cur);
    if (cur.size() == max_len) return;
    for (TokenId w = kUnk; w < vocab; ++w) {
      cur.push_back(w);
      rec();
      cur.pop_back();
    }
  };
  rec();
}

Scored brute_best(const ModelParams& p, std::span<const TokenId> source,
                  std::span<const std::size_t> bytes, std::size_t max_len,
                  const std::function<bool(const std::vector<TokenId>&)>& admissible,
                  std::optional<std::size_t> desired = std::nullopt) {
  Scored best;
  enumerate(p.config().tgt_vocab, max_len, [&](const std::vector<TokenId>& y) {
    if (!admissible(y)) return;
    const double lp = full_logprob(p, source, y, bytes, desired);
    if (lp > best.logprob) best = {y, lp};
  });
  return best;
}

std::vector<TokenId> greedy(const ModelParams& p, std::span<const TokenId> source,
                            std::size_t cap) {
  Tape tape;
  const ModelGraph g(tape, p);
  const EncoderStates enc = encode(g, source);
  DecoderState state = init_decoder_state(g, enc, {});
  std::vector<TokenId> out;
  TokenId prev = kBos;
  for (std::size_t t = 0; t < cap; ++t) {
    const TokenId prevs[] = {prev};
    StepOutput step = decoder_step(g, state, prevs, enc);
    const Tensor lp = step.log_probs.value();
    TokenId arg = kEos;
    for (TokenId w = kEos; w < lp.size(); ++w) {
      if (lp[w] > lp[arg]) arg = w;
    }
    out.push_back(arg);
    if (arg == kEos) break;
    state = step.next;
    prev = arg;
  }
  return out;
}

const std::vector<std::size_t> kBytes5 = {0, 0, 1, 2, 3};

}  // namespace

TEST(Constraint, Validation) {
  EXPECT_THROW(DecodeConstraint::free_search(0).validate(), std::invalid_argument);
  DecodeConstraint c;
  c.method = DecodeMethod::fix_len;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(DecodeConstraint::fix_rng(10, 5).validate(), std::invalid_argument);
  EXPECT_NO_THROW(DecodeConstraint::fix_rng(0, std::nullopt).validate());
  EXPECT_EQ(DecodeConstraint::fix_len(30).step_cap(), 120u);
  EXPECT_EQ(DecodeConstraint::free_search().step_cap(), kUnconstrainedStepCap);
  EXPECT_EQ(DecodeConstraint::fix_rng(0, 75).beam_size, 30u);
  EXPECT_EQ(DecodeConstraint::fix_len(30).beam_size, 10u);
}

TEST(ApplyFixLen, ReplacesLastWordWithEos) {
  BeamHypothesis h;
  h.tokens = {3, 4, 5, 6, 7, 8};  // "two cases of bird flu in"
  h.bytes = 24;
  h.logprob = -3.0;
  EXPECT_EQ(apply_fixlen(h, 9, 6, -0.25, 30), FixLenAction::finalize_with_replacement);
  EXPECT_EQ(h.bytes, 24u);
  EXPECT_DOUBLE_EQ(h.logprob, -3.25);
  EXPECT_EQ(h.tokens.back(), kEos);
  EXPECT_EQ(h.replaced_token, TokenId{9});
  EXPECT_TRUE(h.finished);

  BeamHypothesis fits;
  fits.tokens = {3};
  fits.bytes = 3;
  EXPECT_EQ(apply_fixlen(fits, 4, 5, -1.0, 30), FixLenAction::extend);
  EXPECT_FALSE(fits.finished);
  EXPECT_EQ(fits.tokens.size(), 1u);

  BeamHypothesis empty;
  EXPECT_EQ(apply_fixlen(empty, 3, 1, -2.0, 0), FixLenAction::finalize_with_replacement);
  EXPECT_EQ(empty.tokens, std::vector<TokenId>{kEos});
}

TEST(ApplyFixRng, Rules) {
  BeamHypothesis h;
  h.bytes = 20;
  EXPECT_EQ(apply_fixrng(h, true, 25, 75), FixRngAction::discard);
  EXPECT_EQ(apply_fixrng(h, true, 20, 75), FixRngAction::keep_finished);
  EXPECT_EQ(apply_fixrng(h, false, 25, 75), FixRngAction::keep_live);
  h.bytes = 80;
  EXPECT_EQ(apply_fixrng(h, false, 0, 75), FixRngAction::force_finalize);
  for (std::size_t b : {0u, 1u, 500u, 100000u}) {
    h.bytes = b;
    EXPECT_EQ(apply_fixrng(h, false, 0, std::nullopt), FixRngAction::keep_live);
    EXPECT_EQ(apply_fixrng(h, true, 0, std::nullopt), FixRngAction::keep_finished);
  }
}

TEST(Masking, OnlyEosRankChanges) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(9);
    for (double& s : scores) s = n(rng);
    std::vector<double> masked = scores;
    mask_token(masked, kEos);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (i == kEos) continue;
      EXPECT_EQ(masked[i], scores[i]);
      EXPECT_GT(masked[i], masked[kEos]);
      for (std::size_t j = 0; j < scores.size(); ++j) {
        if (j != kEos) EXPECT_EQ(masked[i] < masked[j], scores[i] < scores[j]);
      }
    }
  }
}

TEST(BeamSearch, BeamOneIsGreedy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ModelParams p = random_model(tiny_config(Variant::plain, 8), seed, 1.5);
    const auto src = random_ids(4, 8, seed);
    std::vector<std::size_t> bytes(8, 3);
    DecodeConstraint c = DecodeConstraint::free_search(1);
    c.max_steps = 12;
    std::vector<TokenId> expected = greedy(p, src, 12);
    if (expected.back() != kEos) {
      EXPECT_THROW(beam_search(p, bytes, src, c), DecodeError);
      continue;
    }
    const DecodeResult r = beam_search(p, bytes, src, c);
    EXPECT_EQ(r.best().tokens, expected) << "seed " << seed;
  }
}

TEST(BeamSearch, Deterministic) {
  const ModelParams p = random_model(tiny_config(Variant::len_emb, 8), 3, 1.5);
  const auto src = random_ids(5, 8, 3);
  std::vector<std::size_t> bytes = {0, 0, 1, 2, 3, 4, 5, 6};
  const auto a = beam_search(p, bytes, src, DecodeConstraint::fix_len(12), 12);
  const auto b = beam_search(p, bytes, src, DecodeConstraint::fix_len(12), 12);
  ASSERT_EQ(a.hypotheses.size(), b.hypotheses.size());
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) {
    EXPECT_EQ(a.hypotheses[i].tokens, b.hypotheses[i].tokens);
    EXPECT_EQ(a.hypotheses[i].logprob, b.hypotheses[i].logprob);
  }
}

TEST(BeamSearch, WideBeamMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const ModelParams p = random_model(tiny_config(Variant::plain, 5), 100 + seed, 1.5);
    const auto src = random_ids(3, 5, seed);
    DecodeConstraint c = DecodeConstraint::free_search(625);
    c.max_steps = 4;
    const DecodeResult r = beam_search(p, kBytes5, src, c);
    const Scored oracle = brute_best(p, src, kBytes5, 3, [](const auto&) { return true; });
    EXPECT_NEAR(r.best().logprob, oracle.logprob, 1e-10) << "seed " << seed;
    EXPECT_EQ(r.best().content(), oracle.tokens) << "seed " << seed;
    // Explicit scores are true sequence log-probabilities.
    EXPECT_NEAR(full_logprob(p, src, r.best().content(), kBytes5, std::nullopt),
                r.best().logprob, 1e-10);

    double previous = kNegInf;
    for (std::size_t k : {1, 2, 3, 5, 10, 40, 625}) {
      DecodeConstraint ck = c;
      ck.beam_size = k;
      double top = kNegInf;
      try {
        top = beam_search(p, kBytes5, src, ck).best().logprob;
      } catch (const DecodeError&) {
      }
      EXPECT_LE(top, oracle.logprob + 1e-12);
      EXPECT_GE(top, previous - 1e-12) << "seed " << seed << " beam " << k;
      previous = std::max(previous, top);
    }
  }
}

TEST(BeamSearch, FixLenMatchesExhaustiveOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelParams p = random_model(tiny_config(Variant::plain, 5), 200 + seed, 1.5);
    const auto src = random_ids(3, 5, seed);
    for (std::size_t desired : {0u, 1u, 3u, 5u}) {
      const DecodeResult r =
          beam_search(p, kBytes5, src, DecodeConstraint::fix_len(desired, 1000));
      const auto feasible = [&](const std::vector<TokenId>& y) {
        const std::size_t b = render_bytes(y, kBytes5);
        if (b > desired) return false;
        for (TokenId w = kUnk; w < 5; ++w) {
          if (extended_bytes(b, kBytes5[w], y.empty()) > desired) return true;
        }
        return false;
      };
      const Scored oracle = brute_best(p, src, kBytes5, 6, feasible);
      EXPECT_NEAR(r.best().logprob, oracle.logprob, 1e-10) << seed << " d=" << desired;
      EXPECT_EQ(r.best().content(), oracle.tokens);
      for (const auto& h : r.hypotheses) {
        EXPECT_TRUE(h.eos_replaced);
        EXPECT_LE(h.bytes, desired);
        ASSERT_TRUE(h.replaced_token.has_value());
        EXPECT_GT(extended_bytes(h.bytes, kBytes5[*h.replaced_token], h.tokens.size() == 1),
                  desired);
      }
      EXPECT_EQ(r.report.first_word_overflow, desired == 0);
    }
  }
}

TEST(BeamSearch, FixRngMatchesExhaustiveOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelParams p = random_model(tiny_config(Variant::plain, 5), 300 + seed, 1.5);
    const auto src = random_ids(3, 5, seed);
    for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{0, 3}, {2, 4}, {4, 6}, {5, 5}}) {
      const DecodeResult r =
          beam_search(p, kBytes5, src, DecodeConstraint::fix_rng(lo, hi, 2000));
      const auto ok = [&](const std::vector<TokenId>& y) {
        const std::size_t b = render_bytes(y, kBytes5);
        return b >= lo && b <= hi;
      };
      const Scored oracle = brute_best(p, src, kBytes5, 7, ok);
      EXPECT_NEAR(r.best().logprob, oracle.logprob, 1e-10) << seed << " " << lo << "-" << hi;
      for (const auto& h : r.hypotheses) {
        EXPECT_EQ(h.tokens.back(), kEos);
        EXPECT_GE(h.bytes, lo);
        EXPECT_LE(h.bytes, hi);
        EXPECT_EQ(h.bytes, render_bytes(h.content(), kBytes5));
      }
      // No duplicate token sequences in the finished list.
      for (std::size_t i = 0; i < r.hypotheses.size(); ++i) {
        for (std::size_t j = i + 1; j < r.hypotheses.size(); ++j) {
          EXPECT_NE(r.hypotheses[i].tokens, r.hypotheses[j].tokens);
        }
      }
    }
  }
}

TEST(BeamSearch, UnboundedRangeIsFreeSearch) {
  const ModelParams p = random_model(tiny_config(Variant::plain, 8), 44, 1.5);
  const auto src = random_ids(4, 8, 44);
  std::vector<std::size_t> bytes(8, 2);
  DecodeConstraint range = DecodeConstraint::fix_rng(0, std::nullopt, 10);
  const auto a = beam_search(p, bytes, src, range);
  const auto b = beam_search(p, bytes, src, DecodeConstraint::free_search(10));
  ASSERT_EQ(a.hypotheses.size(), b.hypotheses.size());
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) {
    EXPECT_EQ(a.hypotheses[i].tokens, b.hypotheses[i].tokens);
    EXPECT_FALSE(a.hypotheses[i].eos_replaced);
  }
}

TEST(BeamSearch, EmptyBeamNamesConstraint) {
  const ModelParams p = random_model(tiny_config(Variant::plain, 6), 50);
  const auto src = random_ids(3, 6, 50);
  std::vector<std::size_t> bytes(6, 2);  // reachable lengths 2, 5, 8, ...
  try {
    beam_search(p, bytes, src, DecodeConstraint::fix_rng(4, 4));
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_NE(std::string(e.what()).find("fixrng(min=4, max=4)"), std::string::npos)
        << e.what();
  }
}

TEST(BeamSearch, StepCapIsReported) {
  ModelParams p = random_model(tiny_config(Variant::plain, 6), 51);
  p.output_weight.value.fill(0.0);
  p.output_bias.value = Tensor::vector({0, -3, 0, 0, 0, 0});
  const auto src = random_ids(3, 6, 51);
  std::vector<std::size_t> bytes(6, 2);
  DecodeConstraint c = DecodeConstraint::free_search(10);
  c.max_steps = 2;
  const DecodeResult r = beam_search(p, bytes, src, c);
  EXPECT_TRUE(r.report.step_cap_reached);
  EXPECT_EQ(r.report.steps, 2u);

  p.output_bias.value = Tensor::vector({0, -60, 0, 0, 0, 0});
  c.beam_size = 2;
  EXPECT_THROW(beam_search(p, bytes, src, c), DecodeError);
}

TEST(BeamSearch, TieBreakPrefersSmallerIds) {
  ModelParams p = random_model(tiny_config(Variant::plain, 6), 52);
  p.output_weight.value.fill(0.0);
  p.output_bias.value = Tensor::vector({0, -1, 2, 2, 2, 2});
  const auto src = random_ids(2, 6, 52);
  std::vector<std::size_t> bytes(6, 1);
  const DecodeResult r = beam_search(p, bytes, src, DecodeConstraint::fix_len(1, 3));
  EXPECT_EQ(r.best().tokens, (std::vector<TokenId>{kUnk, kEos}));
  EXPECT_EQ(r.hypotheses[1].tokens, (std::vector<TokenId>{3, kEos}));
  EXPECT_EQ(r.hypotheses[2].tokens, (std::vector<TokenId>{4, kEos}));
}

TEST(BeamSearch, RejectsBadInputs) {
  const ModelParams plain = random_model(tiny_config(Variant::plain, 6), 53);
  const ModelParams emb = random_model(tiny_config(Variant::len_emb, 6), 53);
  const auto src = random_ids(2, 6, 53);
  std::vector<std::size_t> bytes(6, 1);
  EXPECT_THROW(beam_search(emb, bytes, src, DecodeConstraint::free_search()),
               std::invalid_argument);
  std::vector<std::size_t> short_table(3, 1);
  EXPECT_THROW(beam_search(plain, short_table, src, DecodeConstraint::free_search()),
               std::invalid_argument);
  EXPECT_THROW(decode_learned(plain, bytes, src, 10, true), std::invalid_argument);
}

TEST(DecodeLearned, HardModeBoundsLength) {
  for (Variant v : {Variant::len_emb, Variant::len_init}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ModelParams p = random_model(tiny_config(v, 8), 60 + seed, 1.2);
      const auto src = random_ids(5, 8, seed);
      std::vector<std::size_t> bytes = {0, 0, 1, 1, 2, 3, 4, 5};
      for (std::size_t d : {1u, 4u, 9u}) {
        const DecodeResult r = decode_learned(p, bytes, src, d, true);
        for (const auto& h : r.hypotheses) {
          EXPECT_LE(h.bytes, d);
          EXPECT_EQ(h.tokens.back(), kEos);
        }
        if (d == 1) EXPECT_LE(r.best().content().size(), 1u);
      }
    }
  }
}

TEST(DecodeLearned, LenEmbRemainingTracksBytes) {
  const ModelParams p = random_model(tiny_config(Variant::len_emb, 8), 70, 1.2);
  const auto src = random_ids(5, 8, 70);
  std::vector<std::size_t> bytes = {0, 0, 1, 1, 2, 3, 4, 5};
  for (std::size_t d : {3u, 8u, 20u}) {
    const DecodeResult r = decode_learned(p, bytes, src, d, false);
    for (const auto& h : r.hypotheses) {
      const std::size_t b = render_bytes(h.content(), bytes);
      EXPECT_EQ(h.bytes, b);
      EXPECT_EQ(h.state.remaining, b >= d ? 0 : d - b);
    }
  }
}

TEST(DecodeParallel, KeepsOrderAndMatchesSequential) {
  const ModelParams p = random_model(tiny_config(Variant::plain, 8), 80, 1.2);
  std::vector<std::vector<TokenId>> sources;
  for (std::uint64_t s = 0; s < 9; ++s) sources.push_back(random_ids(2 + s % 4, 8, s));
  std::vector<std::size_t> bytes(8, 2);
  const auto one = [&](std::size_t i) {
    return beam_search(p, bytes, sources[i], DecodeConstraint::fix_len(9));
  };
  const auto seq = decode_parallel(sources.size(), 1, one);
  const auto par = decode_parallel(sources.size(), 3, one);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    EXPECT_EQ(seq[i].best().tokens, par[i].best().tokens);
    EXPECT_EQ(seq[i].best().logprob, par[i].best().logprob);
  }
}
