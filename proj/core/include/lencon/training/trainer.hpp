#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lencon/data/corpus.hpp"
#include "lencon/model/params.hpp"
#include "lencon/training/adam.hpp"
#include "lencon/training/batching.hpp"

namespace lencon {

struct TrainConfig {
  BatchScheme batching;
  AdamConfig adam;
  std::size_t max_updates = 1000;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;  // 0 disables clipping

  void validate() const;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossValue {
  double loss = 0.0;        // mean negative log-likelihood per pair
  std::size_t tokens = 0;   // target tokens including EOS
  std::size_t pairs = 0;

  double per_token() const { return loss * static_cast<double>(pairs) / tokens; }
};

// Zeroes grads, computes -(1/|batch|) sum log p(y|x) and backpropagates into
// every active parameter. Length variants are told each reference's byte
// length. Throws NonFiniteLossError without touching grads further.
LossValue nll_loss(ModelParams& params, std::span<const EncodedPair* const> batch);

struct LossRecord {
  std::size_t update;  // 1-based Adam step
  double loss;
};

struct TrainHooks {
  // Called after every update.
  std::function<void(const LossRecord&)> on_update;
  // Called every checkpoint_every updates and after the last one.
  std::function<void(const ModelParams&, const AdamState&)> on_checkpoint;
  std::size_t checkpoint_every = 0;
};

// Runs updates until state.step reaches config.max_updates. A resumed state
// replays the batch stream up to its step so the sequence matches an
// uninterrupted run.
std::vector<LossRecord> train(ModelParams& params, std::span<const EncodedPair> corpus,
                              const TrainConfig& config, AdamState& state,
                              const TrainHooks& hooks = {});

void write_loss_curve(std::ostream& out, std::span<const LossRecord> records,
                      bool header = true);

}  // namespace lencon
