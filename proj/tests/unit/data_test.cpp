#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <set>
#include <sstream>

#include "lencon/data/corpus.hpp"
#include "lencon/data/length_stats.hpp"
#include "lencon/data/toy_corpus.hpp"

using namespace lencon;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lencon_data_" + name);
}

LoadedCorpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

}  // namespace

TEST(ByteLength, Examples) {
  const std::vector<std::string> headline = {"two", "cases", "of", "bird", "flu", "in", "turkey"};
  EXPECT_EQ(byte_length(headline), 31u);
  EXPECT_EQ(byte_length(std::vector<std::string>{}), 0u);
  EXPECT_EQ(byte_length(std::vector<std::string>{"kwan"}), 4u);
  EXPECT_EQ(byte_length(std::vector<std::string>{"\xc3\xa9t\xc3\xa9"}), 5u);
}

TEST(Corpus, ParsesPair) {
  const auto c = parse("a b c\tb c\n");
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].source, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(c.pairs[0].target, (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(c.pairs[0].target_bytes, 3u);
}

TEST(Corpus, BlankLineSkippedWithWarning) {
  const auto c = parse("a\tb\n\nc\td\n");
  EXPECT_EQ(c.pairs.size(), 2u);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("line 2"), std::string::npos);
}

TEST(Corpus, ErrorsCarryLineNumbers) {
  const auto expect_line = [](const std::string& text, std::size_t line) {
    try {
      parse(text);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const CorpusError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line("a\tb\nno tab here\n", 2);
  expect_line("a\t\n", 1);
  expect_line("\tb\n", 1);
  expect_line("a\tb\nx\ty\n\xff\xfe\tz\n", 3);
  expect_line("a\tb\tc\n", 1);
}

TEST(Corpus, Utf8Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("\xe2\x82\xac"));
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));          // overlong
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));      // surrogate
  EXPECT_FALSE(is_valid_utf8("\xe2\x82"));          // truncated
  EXPECT_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));  // beyond U+10FFFF
}

TEST(Corpus, SaveLoadRoundTrip) {
  ToyCorpusConfig cfg;
  cfg.size = 50;
  const auto toy = gen_toy_corpus(cfg);
  const auto path = temp_file("roundtrip.tsv");
  save_corpus(path, toy.pairs);
  const auto loaded = load_corpus(path);
  EXPECT_EQ(loaded.pairs, toy.pairs);
  EXPECT_TRUE(loaded.warnings.empty());
  std::filesystem::remove(path);
}

TEST(Corpus, LoadMissingFileFails) {
  EXPECT_THROW(load_corpus(temp_file("does_not_exist.tsv")), std::runtime_error);
}

TEST(Vocab, SinglePair) {
  const auto c = parse("x\tx\n");
  const auto [src, tgt] = build_vocab(c.pairs, 100, 100);
  EXPECT_EQ(src.size(), 4u);
  EXPECT_EQ(tgt.size(), 4u);
  EXPECT_EQ(src.id("x"), 3u);
  EXPECT_EQ(tgt.token(kEos), "</s>");
}

TEST(Vocab, ReservedOnlyMapsEverythingToUnk) {
  const auto c = parse("a b\tc d\n");
  const auto [src, tgt] = build_vocab(c.pairs, 100, 3);
  EXPECT_EQ(tgt.size(), 3u);
  const EncodedPair e = encode_pair(c.pairs[0], src, tgt);
  EXPECT_EQ(e.target, (std::vector<TokenId>{kUnk, kUnk, kEos}));
  EXPECT_EQ(e.target_token_bytes, (std::vector<std::size_t>{1, 1, 0}));
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
  const auto c = parse("b b b b b a a z\tq\nc c\tq\n");
  const auto [src, tgt] = build_vocab(c.pairs, 100, 100);
  EXPECT_EQ(src.token(3), "b");
  EXPECT_EQ(src.token(4), "a");  // a and c tie at 2; a first
  EXPECT_EQ(src.token(5), "c");
  EXPECT_EQ(src.token(6), "z");
  const auto [small, unused] = build_vocab(c.pairs, 5, 100);
  EXPECT_EQ(small.size(), 5u);
  EXPECT_EQ(small.id("c"), kUnk);
}

TEST(Vocab, SaveLoadAndBijection) {
  Vocabulary v;
  v.add("alpha");
  v.add("beta");
  EXPECT_EQ(v.add("alpha"), 3u);
  for (TokenId i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(i)), i);
  const auto path = temp_file("vocab.txt");
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path), v);
  std::filesystem::remove(path);
  EXPECT_THROW(v.token(99), std::out_of_range);
}

TEST(ToyCorpus, Deterministic) {
  ToyCorpusConfig cfg;
  cfg.size = 200;
  cfg.seed = 9;
  const auto a = gen_toy_corpus(cfg);
  const auto b = gen_toy_corpus(cfg);
  EXPECT_EQ(a.pairs, b.pairs);
  cfg.seed = 10;
  EXPECT_NE(gen_toy_corpus(cfg).pairs, a.pairs);
}

TEST(ToyCorpus, TargetsAreMaximalPrefixesWithinBudget) {
  ToyCorpusConfig cfg;
  cfg.size = 2000;
  cfg.seed = 3;
  const auto toy = gen_toy_corpus(cfg);
  for (std::size_t i = 0; i < toy.pairs.size(); ++i) {
    const auto& p = toy.pairs[i];
    const std::size_t budget = toy.budgets[i];
    ASSERT_LE(p.target.size(), p.source.size());
    EXPECT_TRUE(std::equal(p.target.begin(), p.target.end(), p.source.begin()));
    EXPECT_EQ(byte_length(p.target), p.target_bytes);
    EXPECT_GE(p.source.size(), cfg.min_source_len);
    EXPECT_LE(p.source.size(), cfg.max_source_len);
    const bool flagged = std::find(toy.flagged.begin(), toy.flagged.end(), i) != toy.flagged.end();
    if (flagged) {
      EXPECT_EQ(p.target.size(), 1u);
      EXPECT_GT(p.target_bytes, budget);
      continue;
    }
    EXPECT_LE(p.target_bytes, budget);
    if (p.target.size() < p.source.size()) {
      EXPECT_GT(p.target_bytes + 1 + p.source[p.target.size()].size(), budget);
    }
  }
}

TEST(ToyCorpus, LexiconLengthsAndReservedTokens) {
  ToyCorpusConfig cfg;
  cfg.vocab_size = 60;
  const auto lex = toy_lexicon(cfg);
  EXPECT_EQ(lex.size(), 57u);
  std::set<std::size_t> lengths;
  for (const auto& w : lex) {
    EXPECT_FALSE(is_reserved_token(w));
    EXPECT_GE(w.size(), 2u);
    EXPECT_LE(w.size(), 8u);
    lengths.insert(w.size());
  }
  EXPECT_EQ(lengths.size(), 7u);
  EXPECT_EQ(std::set<std::string>(lex.begin(), lex.end()).size(), lex.size());
}

TEST(ToyCorpus, WideBudgetGivesIdentitySummary) {
  ToyCorpusConfig cfg;
  cfg.size = 20;
  cfg.min_source_len = 2;
  cfg.max_source_len = 3;
  cfg.min_budget = 200;
  cfg.max_budget = 300;
  for (const auto& p : gen_toy_corpus(cfg).pairs) EXPECT_EQ(p.target, p.source);
}

TEST(ToyCorpus, InvalidConfigRejected) {
  ToyCorpusConfig cfg;
  cfg.vocab_size = 3;
  EXPECT_THROW(gen_toy_corpus(cfg), std::invalid_argument);
  cfg = {};
  cfg.min_budget = 50;
  cfg.max_budget = 10;
  EXPECT_THROW(gen_toy_corpus(cfg), std::invalid_argument);
  cfg = {};
  cfg.size = 0;
  EXPECT_THROW(gen_toy_corpus(cfg), std::invalid_argument);
}

TEST(LengthStats, MeanAndHistogram) {
  const std::size_t two[] = {10, 20};
  const auto s = length_stats(two);
  EXPECT_DOUBLE_EQ(s.mean, 15.0);
  const std::size_t one[] = {7};
  const auto single = length_stats(one);
  ASSERT_EQ(single.histogram.size(), 1u);
  EXPECT_EQ(single.histogram.at(5), 1u);
  EXPECT_THROW(length_stats(std::span<const std::size_t>{}), std::invalid_argument);

  std::ostringstream out;
  write_length_stats_csv(out, s);
  EXPECT_EQ(out.str(), "bin_start,count\n10,1\n20,1\nmean,15\n");
}

TEST(LengthStats, ToyCorpusStaysInBudgetEnvelope) {
  ToyCorpusConfig cfg;
  cfg.size = 3000;
  const auto toy = gen_toy_corpus(cfg);
  const auto s = target_length_stats(toy.pairs);
  std::size_t in_range = 0;
  for (const auto& [bin, count] : s.histogram) {
    if (bin + s.bin_width > cfg.min_budget - 8 && bin <= cfg.max_budget) in_range += count;
  }
  EXPECT_EQ(in_range, s.count);
  EXPECT_GT(s.mean, cfg.min_budget);
  EXPECT_LT(s.mean, cfg.max_budget);
}
