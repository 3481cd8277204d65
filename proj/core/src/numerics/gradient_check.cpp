#include "lencon/numerics/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lencon {
namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  const Var out = loss(tape);
  const Tensor& v = out.value();
  if (v.size() != 1) {
    throw ShapeError("gradient_check: loss must be scalar, got " +
                     shape_string(v.dims()));
  }
  if (!std::isfinite(v[0])) {
    throw std::domain_error("gradient_check: non-finite loss");
  }
  return v[0];
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

GradientCheckResult gradient_check(const LossBuilder& loss,
                                   std::span<Parameter* const> params,
                                   double eps, std::uint64_t seed,
                                   std::size_t samples_per_parameter) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("gradient_check: eps must be positive");
  }
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    const Var out = loss(tape);
    if (out.value().size() != 1 || !std::isfinite(out.value()[0])) {
      throw std::domain_error("gradient_check: loss must be a finite scalar");
    }
    tape.backward(out);
  }

  std::mt19937_64 rng(seed);
  GradientCheckResult result;
  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (n > samples_per_parameter) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(samples_per_parameter);
    }
    for (std::size_t i : coords) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = evaluate(loss);
      p->value[i] = saved - eps;
      const double down = evaluate(loss);
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(p->grad[i], numeric);
      ++result.coordinates_checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        if (err >= result.max_relative_error) {
          result.max_relative_error = err;
          result.worst_parameter = p->name;
          result.worst_index = i;
        }
      }
    }
  }
  return result;
}

}  // namespace lencon
