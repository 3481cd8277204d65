#include "lencon/decoding/beam_search.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "lencon/model/network.hpp"
#include "lencon/numerics/ops.hpp"

namespace lencon {

std::string_view method_name(DecodeMethod m) {
  switch (m) {
    case DecodeMethod::free:
      return "free";
    case DecodeMethod::fix_len:
      return "fixlen";
    case DecodeMethod::fix_rng:
      return "fixrng";
  }
  return "unknown";
}

DecodeConstraint DecodeConstraint::free_search(std::size_t beam) {
  DecodeConstraint c;
  c.beam_size = beam;
  return c;
}

DecodeConstraint DecodeConstraint::fix_len(std::size_t desired, std::size_t beam) {
  DecodeConstraint c;
  c.method = DecodeMethod::fix_len;
  c.desired = desired;
  c.beam_size = beam;
  return c;
}

DecodeConstraint DecodeConstraint::fix_rng(std::size_t min_bytes,
                                           std::optional<std::size_t> max_bytes,
                                           std::size_t beam) {
  DecodeConstraint c;
  c.method = DecodeMethod::fix_rng;
  c.min_bytes = min_bytes;
  c.max_bytes = max_bytes;
  c.beam_size = beam;
  return c;
}

void DecodeConstraint::validate() const {
  if (beam_size == 0) throw std::invalid_argument("decode: beam size must be positive");
  if (method == DecodeMethod::fix_len && !desired) {
    throw std::invalid_argument("decode: fixlen requires a desired length");
  }
  if (method == DecodeMethod::fix_rng && max_bytes && min_bytes.value_or(0) > *max_bytes) {
    throw std::invalid_argument("decode: fixrng requires min <= max");
  }
  if (max_steps && *max_steps == 0) {
    throw std::invalid_argument("decode: max_steps must be positive");
  }
}

std::size_t DecodeConstraint::step_cap() const {
  if (max_steps) return *max_steps;
  std::optional<std::size_t> target;
  if (method == DecodeMethod::fix_len) target = desired;
  if (method == DecodeMethod::fix_rng) target = max_bytes;
  if (!target) return kUnconstrainedStepCap;
  return std::max<std::size_t>(1, 4 * *target);
}

std::string DecodeConstraint::describe() const {
  std::ostringstream out;
  out << method_name(method);
  if (method == DecodeMethod::fix_len) out << "(desired=" << *desired << ")";
  if (method == DecodeMethod::fix_rng) {
    out << "(min=" << min_bytes.value_or(0) << ", max=";
    if (max_bytes) {
      out << *max_bytes;
    } else {
      out << "inf";
    }
    out << ")";
  }
  out << " beam=" << beam_size;
  return out.str();
}

std::vector<TokenId> BeamHypothesis::content() const {
  std::vector<TokenId> out = tokens;
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

std::size_t extended_bytes(std::size_t bytes, std::size_t token_bytes,
                           bool is_first_word) {
  return bytes + token_bytes + (is_first_word ? 0 : 1);
}

void mask_token(std::span<double> scores, TokenId token) {
  scores[token] += kMaskPenalty;
}

FixLenAction apply_fixlen(BeamHypothesis& hyp, TokenId next, std::size_t next_bytes,
                          double eos_logprob, std::size_t desired) {
  if (extended_bytes(hyp.bytes, next_bytes, hyp.tokens.empty()) <= desired) {
    return FixLenAction::extend;
  }
  hyp.tokens.push_back(kEos);
  hyp.logprob += eos_logprob;
  hyp.finished = true;
  hyp.eos_replaced = true;
  hyp.replaced_token = next;
  return FixLenAction::finalize_with_replacement;
}

FixRngAction apply_fixrng(const BeamHypothesis& candidate, bool emitted_eos,
                          std::size_t min_bytes, std::optional<std::size_t> max_bytes) {
  if (emitted_eos) {
    return candidate.bytes < min_bytes ? FixRngAction::discard
                                       : FixRngAction::keep_finished;
  }
  if (max_bytes && candidate.bytes > *max_bytes) return FixRngAction::force_finalize;
  return FixRngAction::keep_live;
}

namespace {

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
  std::size_t bytes;
  bool finished;
  bool replaced;
  TokenId replaced_token;
};

// Higher score first; equal scores prefer the lexicographically smaller
// token sequence. Live parents at one step all have the same length.
bool ranks_before(const Candidate& a, const Candidate& b,
                  const std::vector<BeamHypothesis>& parents) {
  if (a.score != b.score) return a.score > b.score;
  const auto& pa = parents[a.parent].tokens;
  const auto& pb = parents[b.parent].tokens;
  if (pa != pb) return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  return a.token < b.token;
}

bool hypothesis_before(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                      b.tokens.begin(), b.tokens.end());
}

Tensor row_of(const Tensor& t, std::size_t r) {
  const auto row = t.row(r);
  return Tensor({row.size()}, std::vector<double>(row.begin(), row.end()));
}

Tensor stack_rows(const std::vector<BeamHypothesis>& hyps,
                  const Tensor HypothesisState::*field) {
  const std::size_t cols = (hyps.front().state.*field).size();
  Tensor out({hyps.size(), cols});
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const Tensor& v = hyps[k].state.*field;
    std::copy(v.values().begin(), v.values().end(), out.row(k).begin());
  }
  return out;
}

}  // namespace

DecodeResult beam_search(const ModelParams& params,
                         std::span<const std::size_t> token_bytes,
                         std::span<const TokenId> source,
                         const DecodeConstraint& constraint,
                         std::optional<std::size_t> model_length) {
  constraint.validate();
  const Variant variant = params.variant();
  if (variant != Variant::plain && !model_length) {
    throw std::invalid_argument("beam_search: " + std::string(variant_name(variant)) +
                                " model needs a desired length");
  }
  const std::size_t vocab = params.config().tgt_vocab;
  if (token_bytes.size() != vocab) {
    throw std::invalid_argument("beam_search: token byte table has " +
                                std::to_string(token_bytes.size()) +
                                " entries for a vocabulary of " + std::to_string(vocab));
  }

  // Encode once; the memory is tiled across live hypotheses at every step.
  Tensor memory;
  BeamHypothesis root;
  {
    Tape tape;
    const ModelGraph g(tape, params);
    const EncoderStates enc = encode(g, source);
    std::vector<std::size_t> desired;
    if (model_length) desired.push_back(*model_length);
    const DecoderState init = init_decoder_state(g, enc, desired);
    memory = enc.memory.value();
    root.state.h = row_of(init.h.value(), 0);
    root.state.c = row_of(init.c.value(), 0);
    root.state.fed = row_of(init.fed.value(), 0);
    if (!init.remaining.empty()) root.state.remaining = init.remaining.front();
  }
  const std::size_t positions = memory.dims()[1];
  const std::size_t hidden = memory.dims()[2];

  const DecodeMethod method = constraint.method;
  const std::size_t min_bytes = constraint.min_bytes.value_or(0);
  const std::optional<std::size_t> max_bytes = constraint.max_bytes;
  const std::size_t cap = constraint.step_cap();

  DecodeResult result;
  std::vector<BeamHypothesis> beam = {std::move(root)};
  std::vector<BeamHypothesis> finished;
  std::vector<Candidate> candidates;
  std::vector<double> scores(vocab);
  bool root_fits = false;  // some first word fits the fixLen budget

  while (!beam.empty()) {
    if (result.report.steps == cap) {
      result.report.step_cap_reached = true;
      break;
    }
    ++result.report.steps;
    const std::size_t live = beam.size();

    Tape tape;
    const ModelGraph g(tape, params);
    Tensor tiled({live, positions, hidden});
    for (std::size_t k = 0; k < live; ++k) {
      std::copy(memory.values().begin(), memory.values().end(),
                tiled.data() + k * positions * hidden);
    }
    DecoderState state;
    state.h = tape.constant(stack_rows(beam, &HypothesisState::h));
    state.c = tape.constant(stack_rows(beam, &HypothesisState::c));
    state.fed = tape.constant(stack_rows(beam, &HypothesisState::fed));
    std::vector<TokenId> prev(live);
    for (std::size_t k = 0; k < live; ++k) {
      prev[k] = beam[k].tokens.empty() ? kBos : beam[k].tokens.back();
      if (variant == Variant::len_emb) state.remaining.push_back(beam[k].state.remaining);
    }
    const StepOutput out = decoder_step(g, state, prev, tape.constant(std::move(tiled)));
    const Tensor& log_probs = out.log_probs.value();

    candidates.clear();
    for (std::size_t k = 0; k < live; ++k) {
      const BeamHypothesis& parent = beam[k];
      const auto row = log_probs.row(k);
      std::copy(row.begin(), row.end(), scores.begin());
      const double eos_logprob = row[kEos];
      if (method == DecodeMethod::fix_len) mask_token(scores, kEos);
      const bool first = parent.tokens.empty();
      bool closed = false;  // parent + EOS already proposed

      const auto propose_eos = [&](bool replaced, TokenId dropped) {
        if (closed) return;
        closed = true;
        candidates.push_back({k, kEos, parent.logprob + eos_logprob, parent.bytes, true,
                              replaced, dropped});
      };

      for (TokenId w = 0; w < vocab; ++w) {
        if (w == kBos) continue;
        if (w == kEos) {
          if (scores[w] <= kMaskPenalty / 2) continue;
          if (method == DecodeMethod::fix_rng) {
            BeamHypothesis probe;
            probe.bytes = parent.bytes;
            if (apply_fixrng(probe, true, min_bytes, max_bytes) == FixRngAction::discard) {
              continue;
            }
          }
          propose_eos(false, kEos);
          continue;
        }
        const std::size_t bytes = extended_bytes(parent.bytes, token_bytes[w], first);
        if (method == DecodeMethod::fix_len && bytes > *constraint.desired) {
          propose_eos(true, w);
          continue;
        }
        if (first) root_fits = true;
        if (method == DecodeMethod::fix_rng) {
          BeamHypothesis probe;
          probe.bytes = bytes;
          if (apply_fixrng(probe, false, min_bytes, max_bytes) ==
              FixRngAction::force_finalize) {
            probe.bytes = parent.bytes;
            if (apply_fixrng(probe, true, min_bytes, max_bytes) ==
                FixRngAction::keep_finished) {
              propose_eos(true, w);
            }
            continue;
          }
        }
        candidates.push_back({k, w, parent.logprob + scores[w], bytes, false, false, kEos});
      }
    }

    const std::size_t keep = std::min(constraint.beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        return ranks_before(a, b, beam);
                      });

    const Tensor& next_h = out.next.h.value();
    const Tensor& next_c = out.next.c.value();
    const Tensor& next_fed = out.next.fed.value();
    std::vector<BeamHypothesis> next_beam;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& cand = candidates[i];
      const BeamHypothesis& parent = beam[cand.parent];
      BeamHypothesis hyp;
      hyp.tokens = parent.tokens;
      hyp.tokens.push_back(cand.token);
      hyp.logprob = cand.score;
      hyp.bytes = cand.bytes;
      hyp.finished = cand.finished;
      hyp.eos_replaced = cand.replaced;
      if (cand.replaced) hyp.replaced_token = cand.replaced_token;
      if (cand.finished) {
        hyp.state = parent.state;
        finished.push_back(std::move(hyp));
        continue;
      }
      hyp.state.h = row_of(next_h, cand.parent);
      hyp.state.c = row_of(next_c, cand.parent);
      hyp.state.fed = row_of(next_fed, cand.parent);
      hyp.state.remaining = remaining_length_update(
          parent.state.remaining, token_bytes[cand.token], parent.tokens.empty());
      next_beam.push_back(std::move(hyp));
    }
    beam = std::move(next_beam);
  }

  if (finished.empty()) {
    throw DecodeError("beam exhausted with no finished hypothesis under " +
                      constraint.describe() +
                      (result.report.step_cap_reached ? " (step cap reached)" : ""));
  }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  result.hypotheses = std::move(finished);
  result.report.first_word_overflow = method == DecodeMethod::fix_len && !root_fits;
  return result;
}

DecodeResult decode_learned(const ModelParams& params,
                            std::span<const std::size_t> token_bytes,
                            std::span<const TokenId> source, std::size_t desired,
                            bool hard, std::size_t beam_size) {
  if (params.variant() == Variant::plain) {
    throw std::invalid_argument(
        "decode_learned: needs a lenemb or leninit model, got plain");
  }
  DecodeConstraint constraint = hard ? DecodeConstraint::fix_rng(0, desired, beam_size)
                                     : DecodeConstraint::free_search(beam_size);
  if (!hard) constraint.max_steps = std::max<std::size_t>(1, 4 * desired);
  return beam_search(params, token_bytes, source, constraint, desired);
}

std::vector<DecodeResult> decode_parallel(
    std::size_t count, std::size_t workers,
    const std::function<DecodeResult(std::size_t index)>& decode_one) {
  std::vector<DecodeResult> results(count);
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = decode_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          results[i] = decode_one(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace lencon
