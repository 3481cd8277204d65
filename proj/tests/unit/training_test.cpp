#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "lencon/data/toy_corpus.hpp"
#include "lencon/model/network.hpp"
#include "lencon/training/trainer.hpp"

using namespace lencon;
using lencon::testing::random_model;
using lencon::testing::random_pair;
using lencon::testing::tiny_config;

namespace {

std::vector<EncodedPair> toy_encoded(std::size_t size, std::uint64_t seed,
                                     std::size_t vocab = 12, std::size_t min_len = 4,
                                     std::size_t max_len = 6) {
  ToyCorpusConfig cfg;
  cfg.vocab_size = vocab;
  cfg.min_source_len = min_len;
  cfg.max_source_len = max_len;
  cfg.min_budget = 4;
  cfg.max_budget = 20;
  cfg.size = size;
  cfg.seed = seed;
  const auto toy = gen_toy_corpus(cfg);
  const auto [src, tgt] = build_vocab(toy.pairs, 100, 100);
  return encode_corpus(toy.pairs, src, tgt);
}

ModelConfig toy_model_config(Variant v, const std::vector<EncodedPair>& corpus,
                             std::size_t hidden = 16) {
  std::size_t vs = 0;
  std::size_t vt = 0;
  for (const auto& p : corpus) {
    for (TokenId t : p.source) vs = std::max<std::size_t>(vs, t + 1);
    for (TokenId t : p.target) vt = std::max<std::size_t>(vt, t + 1);
  }
  ModelConfig c;
  c.variant = v;
  c.embed_dim = hidden;
  c.hidden_dim = hidden;
  c.len_embed_dim = 8;
  c.length_types = 40;
  c.src_vocab = std::max<std::size_t>(vs, 4);
  c.tgt_vocab = std::max<std::size_t>(vt, 4);
  return c;
}

}  // namespace

TEST(Adam, ZeroGradientIsExactNoOp) {
  ModelParams p = random_model(tiny_config(Variant::len_emb), 1);
  const ModelParams before = p;
  p.zero_grad();
  AdamState s = AdamState::zeros_for(p);
  auto list = p.parameters();
  adam_step(list, s, AdamConfig{});
  EXPECT_EQ(s.step, 1u);
  const auto a = before.parameters();
  for (std::size_t i = 0; i < list.size(); ++i) EXPECT_EQ(list[i]->value, a[i]->value);
}

TEST(Adam, FirstStepMovesAlphaTimesSign) {
  Parameter w("w", Tensor::vector({0.0, 1.0, -2.0}));
  w.grad = Tensor::vector({0.3, -7.0, 1e-3});
  Parameter* list[] = {&w};
  const Parameter* clist[] = {&w};
  AdamState s = AdamState::zeros_for(clist);
  AdamConfig cfg;
  adam_step(list, s, cfg);
  EXPECT_NEAR(w.value[0], -cfg.alpha, 1e-9);
  EXPECT_NEAR(w.value[1], 1.0 + cfg.alpha, 1e-9);
  EXPECT_NEAR(w.value[2], -2.0 - cfg.alpha, 1e-7);
}

TEST(Adam, MatchesClosedFormSecondStep) {
  Parameter w("w", Tensor::vector({0.5}));
  Parameter* list[] = {&w};
  const Parameter* clist[] = {&w};
  AdamState s = AdamState::zeros_for(clist);
  AdamConfig cfg;
  w.grad = Tensor::vector({2.0});
  adam_step(list, s, cfg);
  w.grad = Tensor::vector({-1.0});
  adam_step(list, s, cfg);
  const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
  const double v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81);
  const double vhat = v / (1 - 0.999 * 0.999);
  const double first = cfg.alpha * 2.0 / (2.0 + cfg.eps);
  const double expected = 0.5 - first - cfg.alpha * mhat / (std::sqrt(vhat) + cfg.eps);
  EXPECT_NEAR(w.value[0], expected, 1e-12);
  EXPECT_EQ(s.step, 2u);
}

TEST(Adam, ShapeMismatchRejectedAndConfigValidated) {
  Parameter w("w", Tensor::vector({1, 2}));
  w.zero_grad();
  Parameter* list[] = {&w};
  AdamState s;
  EXPECT_THROW(adam_step(list, s, AdamConfig{}), ShapeError);
  AdamConfig bad;
  bad.beta1 = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.alpha = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Adam, StateRoundTrip) {
  ModelParams p = random_model(tiny_config(Variant::len_init), 2);
  AdamState s = AdamState::zeros_for(p);
  for (Parameter* q : p.parameters()) {
    for (double& g : q->grad.values()) g = 0.25;
  }
  auto list = p.parameters();
  adam_step(list, s, AdamConfig{});
  const auto path = std::filesystem::temp_directory_path() / "lencon_adam.opt";
  save_adam_state(s, p, path);
  const AdamState r = load_adam_state(p, path);
  EXPECT_EQ(r.step, s.step);
  EXPECT_EQ(r.m, s.m);
  EXPECT_EQ(r.v, s.v);
  const ModelParams other = random_model(tiny_config(Variant::plain), 2);
  EXPECT_THROW(load_adam_state(other, path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Clip, GlobalNorm) {
  Parameter a("a", Tensor::vector({0, 0}));
  Parameter b("b", Tensor::vector({0}));
  a.grad = Tensor::vector({3, 0});
  b.grad = Tensor::vector({4});
  Parameter* list[] = {&a, &b};
  EXPECT_DOUBLE_EQ(clip_global_norm(list, 10.0), 5.0);
  EXPECT_EQ(a.grad, Tensor::vector({3, 0}));
  EXPECT_DOUBLE_EQ(clip_global_norm(list, 1.0), 5.0);
  EXPECT_NEAR(a.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad[0], 0.8, 1e-15);
}

TEST(NllLoss, ForcedDistributionGivesZero) {
  ModelParams p = random_model(tiny_config(Variant::plain, 4), 3);
  p.output_weight.value.fill(0.0);
  p.output_bias.value = Tensor::vector({-50, 50, -50, -50});
  EncodedPair pair;
  pair.source = {3};
  pair.target = {kEos};
  pair.target_token_bytes = {0};
  const EncodedPair* batch[] = {&pair};
  EXPECT_NEAR(nll_loss(p, batch).loss, 0.0, 1e-15);
}

TEST(NllLoss, DuplicatingAPairKeepsTheMean) {
  ModelParams p = random_model(tiny_config(Variant::len_emb), 4, 0.5);
  const EncodedPair pair = random_pair(3, 4, 8, 1);
  const EncodedPair* one[] = {&pair};
  const EncodedPair* two[] = {&pair, &pair};
  const double a = nll_loss(p, one).loss;
  const Tensor ga = p.output_weight.grad;
  const double b = nll_loss(p, two).loss;
  EXPECT_NEAR(a, b, 1e-12);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    EXPECT_NEAR(ga[i], p.output_weight.grad[i], 1e-12);
  }
  EXPECT_NEAR(a, -sequence_logprob(p, pair), 1e-12);
}

TEST(NllLoss, GradientsMatchFiniteDifferences) {
  for (Variant v : {Variant::plain, Variant::len_emb, Variant::len_init}) {
    ModelParams p = random_model(tiny_config(v), 5, 0.5);
    if (v == Variant::len_init) {
      for (double& x : p.length_init.value.values()) x *= 0.05;
    }
    const EncodedPair a = random_pair(3, 3, 8, 2);
    EncodedPair b = random_pair(3, 2, 8, 7);
    const EncodedPair* batch[] = {&a, &b};
    nll_loss(p, batch);
    std::mt19937_64 rng(9);
    double worst = 0.0;
    for (Parameter* q : p.parameters()) {
      const Tensor grad = q->grad;
      std::uniform_int_distribution<std::size_t> pick(0, q->value.size() - 1);
      for (int k = 0; k < 6; ++k) {
        const std::size_t i = pick(rng);
        const double orig = q->value[i];
        const double eps = 1e-5;
        q->value[i] = orig + eps;
        const double up = nll_loss(p, batch).loss;
        q->value[i] = orig - eps;
        const double down = nll_loss(p, batch).loss;
        q->value[i] = orig;
        const double numeric = (up - down) / (2 * eps);
        const double err = std::abs(numeric - grad[i]) /
                           std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
        worst = std::max(worst, err);
      }
    }
    EXPECT_LT(worst, 1e-3) << variant_name(v);
  }
}

TEST(NllLoss, NonFiniteAborts) {
  ModelParams p = random_model(tiny_config(Variant::plain), 6);
  p.output_bias.value[3] = std::nan("");
  const EncodedPair pair = random_pair(3, 3, 8, 3);
  const EncodedPair* batch[] = {&pair};
  EXPECT_THROW(nll_loss(p, batch), NonFiniteLossError);
  EXPECT_THROW(nll_loss(p, {}), std::invalid_argument);
}

TEST(Batching, ScaledScheme) {
  BatchScheme s;
  const BatchScheme t = s.scaled_to(2000);
  EXPECT_EQ(t.sample_pool, 2000u);
  EXPECT_EQ(t.regroup_every, 25u);
  EXPECT_EQ(s.scaled_to(10).regroup_every, 1u);
  EXPECT_EQ(s.scaled_to(900000).sample_pool, 800000u);
}

TEST(Batching, PoolOf800GivesTenGroups) {
  std::vector<EncodedPair> corpus(1000);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].source.assign(5, 3);
  BatchScheme s;
  s.batch_size = 80;
  s.sample_pool = 800;
  s.regroup_every = 10;
  std::mt19937_64 rng(1);
  const auto groups = make_batches(corpus, s, rng);
  ASSERT_EQ(groups.size(), 10u);
  std::set<const EncodedPair*> seen;
  for (const auto& g : groups) {
    EXPECT_EQ(g.size(), 80u);
    seen.insert(g.begin(), g.end());
  }
  EXPECT_EQ(seen.size(), 800u);  // corpus larger than pool: no replacement
}

TEST(Batching, GroupsAreLengthHomogeneousAndPartialsLast) {
  const auto corpus = toy_encoded(700, 2, 20, 3, 9);
  BatchScheme s;
  s.batch_size = 16;
  s.sample_pool = 700;
  s.regroup_every = 1000;
  std::mt19937_64 rng(4);
  const auto groups = make_batches(corpus, s, rng);
  bool partial_seen = false;
  std::size_t total = 0;
  for (const auto& g : groups) {
    for (const auto* p : g) EXPECT_EQ(p->source.size(), g.front()->source.size());
    if (g.size() < 16) partial_seen = true;
    if (partial_seen) EXPECT_LT(g.size(), 16u);
    total += g.size();
  }
  EXPECT_EQ(total, 700u);
}

TEST(Batching, StreamIsDeterministic) {
  const auto corpus = toy_encoded(300, 3);
  BatchScheme s;
  s.batch_size = 8;
  BatchStream a(corpus, s, 5);
  BatchStream b(corpus, s, 5);
  BatchStream c(corpus, s, 6);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const Batch& x = a.next();
    const Batch& y = b.next();
    const Batch& z = c.next();
    EXPECT_EQ(x, y);
    if (x != z) differs = true;
  }
  EXPECT_TRUE(differs);
  EXPECT_GT(a.cycles(), 1u);
}

TEST(Train, IdenticalSeedsGiveIdenticalCurvesAndParams) {
  const auto corpus = toy_encoded(200, 4);
  TrainConfig cfg;
  cfg.batching.batch_size = 16;
  cfg.max_updates = 15;
  const auto run = [&] {
    ModelParams p = ModelParams::initialize(toy_model_config(Variant::len_emb, corpus), 1);
    AdamState s;
    const auto curve = train(p, corpus, cfg, s);
    return std::make_pair(curve, p.output_weight.value);
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.first.size(), 15u);
  for (std::size_t i = 0; i < a.first.size(); ++i) {
    EXPECT_EQ(a.first[i].update, i + 1);
    EXPECT_EQ(a.first[i].loss, b.first[i].loss);
  }
  EXPECT_TRUE(a.second == b.second);
  for (std::size_t i = 0; i < a.second.size(); ++i) ASSERT_EQ(a.second[i], b.second[i]) << i;
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const auto corpus = toy_encoded(200, 5);
  TrainConfig cfg;
  cfg.batching.batch_size = 16;
  cfg.max_updates = 12;
  const ModelConfig mc = toy_model_config(Variant::len_init, corpus);

  ModelParams full = ModelParams::initialize(mc, 3);
  AdamState fs;
  const auto whole = train(full, corpus, cfg, fs);

  ModelParams part = ModelParams::initialize(mc, 3);
  AdamState ps;
  TrainConfig first = cfg;
  first.max_updates = 5;
  train(part, corpus, first, ps);
  const auto rest = train(part, corpus, cfg, ps);
  ASSERT_EQ(rest.size(), 7u);
  EXPECT_EQ(rest.front().update, 6u);
  for (std::size_t i = 0; i < rest.size(); ++i) EXPECT_EQ(rest[i].loss, whole[5 + i].loss);
  EXPECT_EQ(part.output_weight.value, full.output_weight.value);
}

TEST(Train, PlainIgnoresDesiredLengths) {
  auto corpus = toy_encoded(150, 6);
  TrainConfig cfg;
  cfg.batching.batch_size = 16;
  cfg.max_updates = 6;
  const ModelConfig mc = toy_model_config(Variant::plain, corpus);
  ModelParams a = ModelParams::initialize(mc, 2);
  AdamState sa;
  const auto ca = train(a, corpus, cfg, sa);
  for (auto& p : corpus) p.target_bytes += 17;
  ModelParams b = ModelParams::initialize(mc, 2);
  AdamState sb;
  const auto cb = train(b, corpus, cfg, sb);
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].loss, cb[i].loss);
}

TEST(Train, CheckpointHookCadence) {
  const auto corpus = toy_encoded(100, 7);
  TrainConfig cfg;
  cfg.batching.batch_size = 16;
  cfg.max_updates = 7;
  ModelParams p = ModelParams::initialize(toy_model_config(Variant::plain, corpus), 1);
  AdamState s;
  std::vector<std::uint64_t> at;
  TrainHooks hooks;
  hooks.checkpoint_every = 3;
  hooks.on_checkpoint = [&](const ModelParams&, const AdamState& st) { at.push_back(st.step); };
  train(p, corpus, cfg, s, hooks);
  EXPECT_EQ(at, (std::vector<std::uint64_t>{3, 6, 7}));
}

TEST(Train, FrozenBatchLossDecreasesEarly) {
  const auto corpus = toy_encoded(40, 8);
  std::vector<const EncodedPair*> batch;
  for (const auto& p : corpus) {
    if (p.source.size() == corpus.front().source.size()) batch.push_back(&p);
  }
  const ModelConfig mc = toy_model_config(Variant::len_emb, corpus);
  int good = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    ModelParams p = ModelParams::initialize(mc, seed);
    AdamState s = AdamState::zeros_for(p);
    auto list = p.parameters();
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (int k = 0; k < 10; ++k) {
      const double loss = nll_loss(p, batch).loss;
      if (!(loss < prev)) decreasing = false;
      prev = loss;
      adam_step(list, s, AdamConfig{});
    }
    if (decreasing) ++good;
  }
  EXPECT_GE(good, 19);
}

TEST(Train, MemorisesSmallCorpus) {
  const auto corpus = toy_encoded(50, 9, 12, 4, 6);
  TrainConfig cfg;
  cfg.batching.batch_size = 10;
  cfg.adam.alpha = 0.005;
  cfg.max_updates = 2000;
  ModelParams p = ModelParams::initialize(toy_model_config(Variant::len_emb, corpus, 32), 4);
  AdamState s;
  std::size_t reached = 0;
  TrainHooks hooks;
  std::vector<const EncodedPair*> all;
  for (const auto& e : corpus) all.push_back(&e);
  hooks.on_update = [&](const LossRecord& r) {
    if (reached || r.update % 100) return;
    double nats = 0;
    std::size_t tokens = 0;
    for (const auto* e : all) {
      nats -= sequence_logprob(p, *e);
      tokens += e->target.size();
    }
    if (nats / tokens < 0.1) reached = r.update;
  };
  train(p, corpus, cfg, s, hooks);
  EXPECT_GT(reached, 0u) << "corpus loss never fell below 0.1 nats/token";
}

TEST(LossCurve, CsvFormat) {
  const LossRecord r[] = {{1, 2.5}, {2, 1.25}};
  std::ostringstream out;
  write_loss_curve(out, r);
  EXPECT_EQ(out.str(), "update,loss\n1,2.5\n2,1.25\n");
}
