#include <benchmark/benchmark.h>

#include <random>

#include "lencon/data/toy_corpus.hpp"
#include "lencon/decoding/beam_search.hpp"
#include "lencon/evaluation/rouge.hpp"
#include "lencon/model/network.hpp"
#include "lencon/training/trainer.hpp"

namespace {

using namespace lencon;

struct Fixture {
  ModelParams params;
  std::vector<std::size_t> token_bytes;
  std::vector<EncodedPair> corpus;
};

// A small lenEmb model over a toy corpus, built once per dimension pair.
Fixture make_fixture(std::size_t hidden, std::size_t embed) {
  ToyCorpusConfig toy;
  toy.size = 400;
  const ToyCorpus c = gen_toy_corpus(toy);
  auto [src, tgt] = build_vocab(c.pairs, SIZE_MAX, SIZE_MAX);
  ModelConfig config;
  config.variant = Variant::len_emb;
  config.embed_dim = embed;
  config.hidden_dim = hidden;
  config.len_embed_dim = embed;
  config.length_types = 100;
  config.src_vocab = src.size();
  config.tgt_vocab = tgt.size();
  return {ModelParams::initialize(config, 1), tgt.token_bytes(),
          encode_corpus(c.pairs, src, tgt)};
}

void BM_DecoderStep(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto rows = static_cast<std::size_t>(state.range(1));
  const Fixture f = make_fixture(hidden, hidden / 2);
  std::vector<std::vector<TokenId>> sources(rows, f.corpus.front().source);
  const std::vector<std::size_t> desired(rows, 30);
  const std::vector<TokenId> prev(rows, kBos);
  // encoder output is computed once; only the step is timed
  Tape setup;
  const ModelGraph sg(setup, f.params);
  const EncoderStates enc = encode(sg, sources);
  const DecoderState init = init_decoder_state(sg, enc, desired);
  const Tensor memory = enc.memory.value();
  const Tensor h = init.h.value();
  const Tensor c = init.c.value();
  const Tensor fed = init.fed.value();
  for (auto _ : state) {
    Tape tape;
    const ModelGraph g(tape, f.params);
    DecoderState s;
    s.h = tape.constant(h);
    s.c = tape.constant(c);
    s.fed = tape.constant(fed);
    s.remaining = desired;
    const StepOutput out = decoder_step(g, s, prev, tape.constant(memory));
    benchmark::DoNotOptimize(out.log_probs.value()[0]);
  }
}
BENCHMARK(BM_DecoderStep)->Args({64, 1})->Args({64, 10})->Args({200, 10});

void BM_BeamSearch(benchmark::State& state) {
  const Fixture f = make_fixture(64, 32);
  const auto beam = static_cast<std::size_t>(state.range(0));
  const auto& src = f.corpus.front().source;
  for (auto _ : state) {
    const auto r = beam_search(f.params, f.token_bytes, src,
                               DecodeConstraint::fix_rng(0, 30, beam), 30);
    benchmark::DoNotOptimize(r.best().logprob);
  }
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  Fixture f = make_fixture(64, 32);
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  std::vector<const EncodedPair*> batch;
  // one length bucket, repeated as needed to fill the batch
  std::vector<const EncodedPair*> bucket;
  for (const auto& p : f.corpus) {
    if (p.source.size() == f.corpus.front().source.size()) bucket.push_back(&p);
  }
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(bucket[i % bucket.size()]);
  AdamState adam = AdamState::zeros_for(f.params);
  const auto list = f.params.parameters();
  for (auto _ : state) {
    benchmark::DoNotOptimize(nll_loss(f.params, batch).loss);
    clip_global_norm(list, 5.0);
    adam_step(list, adam, AdamConfig{});
  }
}
BENCHMARK(BM_TrainStep)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_Rouge(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> word(0, 30);
  const auto draw = [&] {
    Tokens t(n);
    for (auto& w : t) w = "w" + std::to_string(word(rng));
    return t;
  };
  const Tokens cand = draw();
  const std::vector<Tokens> refs = {draw(), draw()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rouge_n(cand, refs, 1) + rouge_n(cand, refs, 2) +
                             rouge_l(cand, refs));
  }
}
BENCHMARK(BM_Rouge)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
