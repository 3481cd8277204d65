#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lencon/numerics/tape.hpp"

namespace lencon {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

// Builds the scalar loss on the given tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

// Compares backprop gradients against central differences
// (f(x+eps) - f(x-eps)) / (2 eps) on up to `samples_per_parameter` random
// coordinates of each parameter. Relative error is
// |a - n| / max(|a|, |n|, 1e-8). Throws on eps <= 0 or a non-finite loss.
GradientCheckResult gradient_check(const LossBuilder& loss,
                                   std::span<Parameter* const> params,
                                   double eps, std::uint64_t seed,
                                   std::size_t samples_per_parameter = 16);

double relative_error(double analytic, double numeric);

}  // namespace lencon
