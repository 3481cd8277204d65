#include "lencon/training/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

#include "lencon/model/network.hpp"

namespace lencon {

void TrainConfig::validate() const {
  batching.validate();
  adam.validate();
  if (clip_norm < 0) throw std::invalid_argument("train: clip_norm must be >= 0");
}

LossValue nll_loss(ModelParams& params, std::span<const EncodedPair* const> batch) {
  if (batch.empty()) throw std::invalid_argument("nll_loss: empty batch");
  params.zero_grad();
  Tape tape;
  const ModelGraph g(tape, params);
  const double w = -1.0 / static_cast<double>(batch.size());
  const std::vector<double> weights(batch.size(), w);
  std::vector<std::size_t> desired;
  LossValue out;
  out.pairs = batch.size();
  for (const EncodedPair* p : batch) {
    if (params.variant() != Variant::plain) desired.push_back(p->target_bytes);
    out.tokens += p->target.size();
  }
  const auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << what << " on a batch of " << batch.size() << " pairs with source length "
        << batch.front()->source.size();
    throw NonFiniteLossError(msg.str());
  };
  Var loss;
  try {
    loss = batch_log_likelihood(g, batch, weights, desired);
  } catch (const std::domain_error& e) {
    fail(std::string("non-finite activations (") + e.what() + ")");
  }
  out.loss = loss.value()[0];
  if (!std::isfinite(out.loss)) fail("non-finite loss " + std::to_string(out.loss));
  tape.backward(loss);
  return out;
}

std::vector<LossRecord> train(ModelParams& params, std::span<const EncodedPair> corpus,
                              const TrainConfig& config, AdamState& state,
                              const TrainHooks& hooks) {
  config.validate();
  const auto list = params.parameters();
  if (state.m.empty() && state.step == 0) state = AdamState::zeros_for(params);
  BatchStream stream(corpus, config.batching, config.seed);
  stream.skip(state.step);

  std::vector<LossRecord> records;
  while (state.step < config.max_updates) {
    const Batch& batch = stream.next();
    const LossValue loss = nll_loss(params, batch);
    if (config.clip_norm > 0) clip_global_norm(list, config.clip_norm);
    adam_step(list, state, config.adam);
    records.push_back({static_cast<std::size_t>(state.step), loss.loss});
    if (hooks.on_update) hooks.on_update(records.back());
    const bool last = state.step == config.max_updates;
    if (hooks.on_checkpoint &&
        (last || (hooks.checkpoint_every && state.step % hooks.checkpoint_every == 0))) {
      hooks.on_checkpoint(params, state);
    }
  }
  return records;
}

void write_loss_curve(std::ostream& out, std::span<const LossRecord> records,
                      bool header) {
  if (header) out << "update,loss\n";
  const auto old = out.precision(10);
  for (const auto& r : records) out << r.update << ',' << r.loss << '\n';
  out.precision(old);
}

}  // namespace lencon
