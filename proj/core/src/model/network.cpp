#include "lencon/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lencon {

ModelGraph::ModelGraph(Tape& tape, ModelParams& params)
    : tape_(&tape), params_(&params), mutable_(&params) {}

ModelGraph::ModelGraph(Tape& tape, const ModelParams& params)
    : tape_(&tape), params_(&params) {}

Var ModelGraph::operator()(const Parameter& p) const {
  if (mutable_) {
    // p is a member of *mutable_, reached through the const view.
    return tape_->parameter(const_cast<Parameter&>(p));
  }
  return tape_->reference(p.value);
}

LstmState lstm_step(const ModelGraph& g, const LstmBlock& block, Var h_prev,
                    Var c_prev, Var input) {
  const std::size_t H = block.recurrent.value.dims()[1];
  if (input.value().cols() != block.input.value.dims()[1]) {
    throw ShapeError("lstm_step: input " + shape_string(input.dims()) +
                     " does not match input weights " +
                     shape_string(block.input.value.dims()));
  }
  if (h_prev.value().cols() != H || c_prev.value().cols() != H) {
    throw ShapeError("lstm_step: recurrent state " + shape_string(h_prev.dims()) +
                     " does not match hidden size " + std::to_string(H));
  }
  const Var z = add(affine(g(block.input), input, g(block.bias)),
                    matmul(g(block.recurrent), h_prev));
  const Var in_gate = sigmoid(slice(z, 0, H));
  const Var forget_gate = sigmoid(slice(z, H, H));
  const Var out_gate = sigmoid(slice(z, 2 * H, H));
  const Var candidate = tanh(slice(z, 3 * H, H));
  const Var c = add(mul(forget_gate, c_prev), mul(in_gate, candidate));
  const Var h = mul(out_gate, tanh(c));
  return {h, c};
}

EncoderStates encode(const ModelGraph& g,
                     std::span<const std::vector<TokenId>> sources) {
  if (sources.empty()) throw std::invalid_argument("encode: empty batch");
  const std::size_t n = sources.front().size();
  if (n == 0) throw std::invalid_argument("encode: empty source");
  const ModelParams& params = g.params();
  const std::size_t vocab = params.config().src_vocab;
  for (const auto& s : sources) {
    if (s.size() != n) {
      throw std::invalid_argument("encode: batch sources differ in length");
    }
    for (TokenId id : s) {
      if (id >= vocab) {
        throw std::out_of_range("encode: token id " + std::to_string(id) +
                                " outside source vocabulary of " +
                                std::to_string(vocab));
      }
    }
  }
  const std::size_t batch = sources.size();
  const std::size_t H = params.config().hidden_dim;
  Tape& tape = g.tape();

  std::vector<Var> embedded(n);
  std::vector<std::size_t> ids(batch);
  const Var table = g(params.src_embed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < batch; ++b) ids[b] = sources[b][i];
    embedded[i] = embedding_lookup(table, ids);
  }

  EncoderStates enc;
  enc.batch = batch;
  enc.length = n;
  enc.fwd_h.resize(n);
  enc.fwd_c.resize(n);
  enc.bwd_h.resize(n);
  enc.bwd_c.resize(n);
  const Var zero = tape.constant(Tensor({batch, H}));

  Var h = zero;
  Var c = zero;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = lstm_step(g, params.fwd_lstm, h, c, embedded[i]);
    enc.fwd_h[i] = h = s.h;
    enc.fwd_c[i] = c = s.c;
  }
  h = zero;
  c = zero;
  for (std::size_t i = n; i-- > 0;) {
    auto s = lstm_step(g, params.bwd_lstm, h, c, embedded[i]);
    enc.bwd_h[i] = h = s.h;
    enc.bwd_c[i] = c = s.c;
  }
  enc.summed.resize(n);
  for (std::size_t i = 0; i < n; ++i) enc.summed[i] = add(enc.fwd_h[i], enc.bwd_h[i]);
  enc.memory = stack(enc.summed);
  return enc;
}

EncoderStates encode(const ModelGraph& g, std::span<const TokenId> source) {
  const std::vector<TokenId> one(source.begin(), source.end());
  return encode(g, std::span<const std::vector<TokenId>>(&one, 1));
}

DecoderState init_decoder_state(const ModelGraph& g, const EncoderStates& enc,
                                std::span<const std::size_t> desired_lengths) {
  const ModelParams& params = g.params();
  const Variant variant = params.variant();
  if (variant != Variant::plain && desired_lengths.size() != enc.batch) {
    throw std::invalid_argument(
        "init_decoder_state: " + std::string(variant_name(variant)) +
        " needs a desired length for every batch row");
  }
  DecoderState state;
  state.h = enc.bwd_h.front();
  if (variant == Variant::len_init) {
    std::vector<double> factors(desired_lengths.begin(), desired_lengths.end());
    state.c = scale_rows(g(params.length_init), factors);
  } else {
    state.c = enc.bwd_c.front();
  }
  state.fed = g.tape().constant(Tensor({enc.batch, params.config().hidden_dim}));
  if (variant == Variant::len_emb) {
    state.remaining.assign(desired_lengths.begin(), desired_lengths.end());
  }
  return state;
}

Attention attend(Var h, Var memory) {
  const Var scores = batched_matvec(memory, h);
  const Var weights = softmax(scores);
  return {batched_vecmat(weights, memory), weights};
}

Attention attend(Var h, const EncoderStates& enc) { return attend(h, enc.memory); }

Var length_embedding(const ModelGraph& g, std::span<const std::size_t> remaining) {
  const ModelParams& params = g.params();
  if (params.variant() != Variant::len_emb) {
    throw std::logic_error("length_embedding: model has no length embedding");
  }
  const std::size_t last = params.config().length_types - 1;
  std::vector<std::size_t> rows(remaining.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = std::min(remaining[i], last);
  return embedding_lookup(g(params.length_embed), rows);
}

Tensor StepOutput::distribution() const {
  Tensor probs = log_probs.value();
  for (double& v : probs.values()) v = std::exp(v);
  return probs;
}

StepOutput decoder_step(const ModelGraph& g, const DecoderState& state,
                        std::span<const TokenId> prev_tokens, Var memory) {
  const ModelParams& params = g.params();
  const std::size_t vocab = params.config().tgt_vocab;
  std::vector<std::size_t> ids(prev_tokens.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (prev_tokens[i] >= vocab) {
      throw std::out_of_range("decoder_step: token id " +
                              std::to_string(prev_tokens[i]) +
                              " outside target vocabulary of " +
                              std::to_string(vocab));
    }
    ids[i] = prev_tokens[i];
  }
  std::vector<Var> parts = {embedding_lookup(g(params.tgt_embed), ids), state.fed};
  if (params.variant() == Variant::len_emb) {
    if (state.remaining.size() != ids.size()) {
      throw std::invalid_argument("decoder_step: remaining lengths missing");
    }
    parts.push_back(length_embedding(g, state.remaining));
  }
  const Var input = concat(parts);
  const LstmState lstm = lstm_step(g, params.dec_lstm, state.h, state.c, input);
  const Attention att = attend(lstm.h, memory);
  const Var s_tilde = tanh(affine(g(params.combine_weight),
                                  concat(lstm.h, att.context), g(params.combine_bias)));
  const Var logits = affine(g(params.output_weight), s_tilde, g(params.output_bias));

  StepOutput out;
  out.log_probs = log_softmax(logits);
  out.s_tilde = s_tilde;
  out.attention = att.weights;
  out.next.h = lstm.h;
  out.next.c = lstm.c;
  out.next.fed = s_tilde;
  out.next.remaining = state.remaining;
  return out;
}

StepOutput decoder_step(const ModelGraph& g, const DecoderState& state,
                        std::span<const TokenId> prev_tokens,
                        const EncoderStates& enc) {
  return decoder_step(g, state, prev_tokens, enc.memory);
}

std::size_t remaining_length_update(std::size_t remaining, std::size_t token_bytes,
                                    bool is_first_word) {
  const std::size_t cost = token_bytes + (is_first_word ? 0 : 1);
  return cost >= remaining ? 0 : remaining - cost;
}

std::size_t remaining_length_update(std::size_t remaining,
                                    std::string_view emitted, bool is_first_word) {
  return remaining_length_update(remaining, emitted.size(), is_first_word);
}

Var batch_log_likelihood(const ModelGraph& g,
                         std::span<const EncodedPair* const> batch,
                         std::span<const double> weights,
                         std::span<const std::size_t> desired_lengths) {
  if (batch.empty()) throw std::invalid_argument("batch_log_likelihood: empty batch");
  if (weights.size() != batch.size()) {
    throw std::invalid_argument("batch_log_likelihood: one weight per pair required");
  }
  std::vector<std::vector<TokenId>> sources;
  sources.reserve(batch.size());
  std::size_t steps = 0;
  for (const EncodedPair* p : batch) {
    if (p->target.empty()) throw std::invalid_argument("batch_log_likelihood: empty target");
    if (p->target.back() != kEos) {
      throw std::invalid_argument("batch_log_likelihood: target must end with EOS");
    }
    sources.push_back(p->source);
    steps = std::max(steps, p->target.size());
  }
  const EncoderStates enc = encode(g, sources);
  DecoderState state = init_decoder_state(g, enc, desired_lengths);

  const std::size_t rows = batch.size();
  std::vector<TokenId> prev(rows, kBos);
  std::vector<std::size_t> gold(rows);
  std::vector<double> step_weights(rows);
  Var total;
  for (std::size_t t = 0; t < steps; ++t) {
    StepOutput out = decoder_step(g, state, prev, enc);
    for (std::size_t b = 0; b < rows; ++b) {
      const auto& target = batch[b]->target;
      const bool live = t < target.size();
      gold[b] = live ? target[t] : kEos;
      step_weights[b] = live ? weights[b] : 0.0;
    }
    const Var picked = pick_weighted_sum(out.log_probs, gold, step_weights);
    total = total.valid() ? add(total, picked) : picked;

    state = std::move(out.next);
    for (std::size_t b = 0; b < rows; ++b) {
      prev[b] = static_cast<TokenId>(gold[b]);
      if (!state.remaining.empty() && t < batch[b]->target.size()) {
        const auto& bytes = batch[b]->target_token_bytes;
        const std::size_t cost = t < bytes.size() ? bytes[t] : 0;
        state.remaining[b] = remaining_length_update(state.remaining[b], cost, t == 0);
      }
    }
  }
  return total;
}

double sequence_logprob(const ModelParams& params, std::span<const TokenId> source,
                        std::span<const TokenId> target,
                        std::span<const std::size_t> target_token_bytes,
                        std::optional<std::size_t> desired_length) {
  if (target.empty()) throw std::invalid_argument("sequence_logprob: empty target");
  if (params.variant() != Variant::plain && !desired_length) {
    throw std::invalid_argument("sequence_logprob: " +
                                std::string(variant_name(params.variant())) +
                                " needs a desired length");
  }
  EncodedPair pair;
  pair.source.assign(source.begin(), source.end());
  pair.target.assign(target.begin(), target.end());
  pair.target_token_bytes.assign(target_token_bytes.begin(), target_token_bytes.end());
  Tape tape;
  const ModelGraph g(tape, params);
  const EncodedPair* one[] = {&pair};
  const double weight[] = {1.0};
  std::vector<std::size_t> desired;
  if (desired_length) desired.push_back(*desired_length);
  return batch_log_likelihood(g, one, weight, desired).value()[0];
}

double sequence_logprob(const ModelParams& params, const EncodedPair& pair) {
  std::optional<std::size_t> desired;
  if (params.variant() != Variant::plain) desired = pair.target_bytes;
  return sequence_logprob(params, pair.source, pair.target, pair.target_token_bytes,
                          desired);
}

}  // namespace lencon
