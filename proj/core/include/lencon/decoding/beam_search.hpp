#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lencon/data/vocabulary.hpp"
#include "lencon/model/params.hpp"
#include "lencon/numerics/tensor.hpp"

namespace lencon {

enum class DecodeMethod { free, fix_len, fix_rng };

std::string_view method_name(DecodeMethod m);

inline constexpr std::size_t kDefaultBeam = 10;
inline constexpr std::size_t kDefaultRangeBeam = 30;
inline constexpr std::size_t kUnconstrainedStepCap = 120;

struct DecodeConstraint {
  DecodeMethod method = DecodeMethod::free;
  std::optional<std::size_t> desired;    // fixLen
  std::optional<std::size_t> min_bytes;  // fixRng; absent means 0
  std::optional<std::size_t> max_bytes;  // fixRng; absent means unbounded
  std::size_t beam_size = kDefaultBeam;
  // Overrides the default cap of 4 x the byte target (120 when unbounded).
  std::optional<std::size_t> max_steps;

  static DecodeConstraint free_search(std::size_t beam = kDefaultBeam);
  static DecodeConstraint fix_len(std::size_t desired, std::size_t beam = kDefaultBeam);
  static DecodeConstraint fix_rng(std::size_t min_bytes,
                                  std::optional<std::size_t> max_bytes,
                                  std::size_t beam = kDefaultRangeBeam);

  void validate() const;
  std::size_t step_cap() const;
  std::string describe() const;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Recurrent state of a single hypothesis.
struct HypothesisState {
  Tensor h;
  Tensor c;
  Tensor fed;
  std::size_t remaining = 0;
};

struct BeamHypothesis {
  std::vector<TokenId> tokens;  // emitted ids; a finished one ends with EOS
  double logprob = 0.0;
  HypothesisState state;
  std::size_t bytes = 0;        // rendered length of the content tokens
  bool finished = false;
  bool eos_replaced = false;    // finalized by EOS replacement
  std::optional<TokenId> replaced_token;  // the word EOS stood in for

  std::vector<TokenId> content() const;  // tokens without the trailing EOS
};

// Byte length after appending a token of `token_bytes` bytes.
std::size_t extended_bytes(std::size_t bytes, std::size_t token_bytes,
                           bool is_first_word);

// Adds the mask penalty to one coordinate of a score row.
void mask_token(std::span<double> scores, TokenId token);

enum class FixLenAction { extend, finalize_with_replacement };

// If appending `next` would push hyp past `desired` bytes, finalizes hyp in
// place: `next` is dropped, EOS is appended and eos_logprob is added instead
// of the word's score.
FixLenAction apply_fixlen(BeamHypothesis& hyp, TokenId next, std::size_t next_bytes,
                          double eos_logprob, std::size_t desired);

enum class FixRngAction { keep_live, keep_finished, discard, force_finalize };

// Judges a candidate whose byte length already includes its last token.
FixRngAction apply_fixrng(const BeamHypothesis& candidate, bool emitted_eos,
                          std::size_t min_bytes, std::optional<std::size_t> max_bytes);

struct DecodeReport {
  std::size_t steps = 0;
  bool step_cap_reached = false;
  // fixLen could not place even the first word; the summary is empty.
  bool first_word_overflow = false;
};

struct DecodeResult {
  std::vector<BeamHypothesis> hypotheses;  // finished, best first
  DecodeReport report;

  const BeamHypothesis& best() const { return hypotheses.front(); }
};

// token_bytes[id] is the rendered byte length of target token id. For lenEmb
// and lenInit models, model_length is the desired length fed to the network.
DecodeResult beam_search(const ModelParams& params,
                         std::span<const std::size_t> token_bytes,
                         std::span<const TokenId> source,
                         const DecodeConstraint& constraint,
                         std::optional<std::size_t> model_length = std::nullopt);

// Learned length control: the model receives `desired`. hard=true bounds the
// output to (0, desired] bytes with the fixRng rules; hard=false is standard
// beam search.
DecodeResult decode_learned(const ModelParams& params,
                            std::span<const std::size_t> token_bytes,
                            std::span<const TokenId> source, std::size_t desired,
                            bool hard, std::size_t beam_size = kDefaultBeam);

// Decodes sources on `workers` threads; results keep input order.
std::vector<DecodeResult> decode_parallel(
    std::size_t count, std::size_t workers,
    const std::function<DecodeResult(std::size_t index)>& decode_one);

}  // namespace lencon
