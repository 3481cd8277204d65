#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lencon/model/params.hpp"

namespace lencon {

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;  // first moments, one per parameter
  std::vector<Tensor> v;  // second moments
  std::uint64_t step = 0;

  static AdamState zeros_for(std::span<const Parameter* const> params);
  static AdamState zeros_for(const ModelParams& params);
};

// One bias-corrected Adam update from each parameter's grad. Increments step.
void adam_step(std::span<Parameter* const> params, AdamState& state,
               const AdamConfig& config);

double global_grad_norm(std::span<const Parameter* const> params);
// Rescales all grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(std::span<Parameter* const> params, double max_norm);

// Same container as checkpoints; records are m.<name> and v.<name>.
void save_adam_state(const AdamState& state, const ModelParams& params,
                     const std::filesystem::path& path);
AdamState load_adam_state(const ModelParams& params, const std::filesystem::path& path);

}  // namespace lencon
