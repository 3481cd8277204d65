#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lencon/data/corpus.hpp"
#include "lencon/data/vocabulary.hpp"
#include "lencon/model/params.hpp"
#include "lencon/numerics/ops.hpp"

namespace lencon {

// Binds model parameters to a tape, either as trainable leaves (gradients
// accumulate into the parameters) or as frozen read-only references.
class ModelGraph {
 public:
  ModelGraph(Tape& tape, ModelParams& params);
  ModelGraph(Tape& tape, const ModelParams& params);

  Tape& tape() const { return *tape_; }
  const ModelParams& params() const { return *params_; }
  bool trainable() const { return mutable_ != nullptr; }

  Var operator()(const Parameter& p) const;

 private:
  Tape* tape_;
  const ModelParams* params_;
  ModelParams* mutable_ = nullptr;
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(const ModelGraph& g, const LstmBlock& block, Var h_prev,
                    Var c_prev, Var input);

// Per-position states of the bidirectional encoder for a batch of equally
// long sources. Index i is source position i (0-based).
struct EncoderStates {
  std::vector<Var> fwd_h, fwd_c, bwd_h, bwd_c, summed;
  Var memory;  // summed states stacked to [B x N x H]
  std::size_t batch = 0;
  std::size_t length = 0;
};

EncoderStates encode(const ModelGraph& g,
                     std::span<const std::vector<TokenId>> sources);
EncoderStates encode(const ModelGraph& g, std::span<const TokenId> source);

struct DecoderState {
  Var h;
  Var c;
  Var fed;                             // previous attentional vector
  std::vector<std::size_t> remaining;  // lenEmb: bytes left, one per row
};

// desired_lengths holds one entry per batch row; it may be empty for plain.
DecoderState init_decoder_state(const ModelGraph& g, const EncoderStates& enc,
                                std::span<const std::size_t> desired_lengths);

struct Attention {
  Var context;  // [B x H]
  Var weights;  // [B x N]
};

Attention attend(Var h, Var memory);
Attention attend(Var h, const EncoderStates& enc);

Var length_embedding(const ModelGraph& g, std::span<const std::size_t> remaining);

struct StepOutput {
  Var log_probs;  // [B x V_tgt]
  Var s_tilde;    // [B x H]
  Var attention;  // [B x N]
  // h, c and fed advanced; remaining is carried over unchanged and must be
  // moved forward with the chosen token via remaining_length_update.
  DecoderState next;

  Tensor distribution() const;
};

StepOutput decoder_step(const ModelGraph& g, const DecoderState& state,
                        std::span<const TokenId> prev_tokens, Var memory);
StepOutput decoder_step(const ModelGraph& g, const DecoderState& state,
                        std::span<const TokenId> prev_tokens,
                        const EncoderStates& enc);

// max(0, l - bytes - separator), where the separator byte is charged to
// every word after the first.
std::size_t remaining_length_update(std::size_t remaining, std::size_t token_bytes,
                                    bool is_first_word);
std::size_t remaining_length_update(std::size_t remaining,
                                    std::string_view emitted, bool is_first_word);

// Teacher-forced sum over the batch of weights[b] * log p(target_b | source_b).
// All sources must share one length. desired_lengths may be empty for plain.
Var batch_log_likelihood(const ModelGraph& g,
                         std::span<const EncodedPair* const> batch,
                         std::span<const double> weights,
                         std::span<const std::size_t> desired_lengths);

// log p(target | source); target must end with EOS. For length-conditioned
// variants desired_length is required.
double sequence_logprob(const ModelParams& params, std::span<const TokenId> source,
                        std::span<const TokenId> target,
                        std::span<const std::size_t> target_token_bytes,
                        std::optional<std::size_t> desired_length);
double sequence_logprob(const ModelParams& params, const EncodedPair& pair);

}  // namespace lencon
