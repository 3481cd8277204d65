#include "lencon/training/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lencon/model/checkpoint.hpp"

namespace lencon {

void AdamConfig::validate() const {
  if (!(alpha > 0)) throw std::invalid_argument("adam: alpha must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw std::invalid_argument("adam: beta1 must be in (0,1)");
  if (!(beta2 > 0 && beta2 < 1)) throw std::invalid_argument("adam: beta2 must be in (0,1)");
  if (!(eps > 0)) throw std::invalid_argument("adam: eps must be positive");
}

AdamState AdamState::zeros_for(std::span<const Parameter* const> params) {
  AdamState s;
  for (const Parameter* p : params) {
    s.m.push_back(Tensor::zeros_like(p->value));
    s.v.push_back(Tensor::zeros_like(p->value));
  }
  return s;
}

AdamState AdamState::zeros_for(const ModelParams& params) {
  const auto list = params.parameters();
  return zeros_for(std::span<const Parameter* const>(list));
}

void adam_step(std::span<Parameter* const> params, AdamState& state,
               const AdamConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) +
                     " moments for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (state.m[i].dims() != p.value.dims() || state.v[i].dims() != p.value.dims() ||
        p.grad.dims() != p.value.dims()) {
      throw ShapeError("adam_step: shape mismatch for " + p.name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    double* w = p.value.data();
    const double* g = p.grad.data();
    for (std::size_t j = 0, n = p.value.size(); j < n; ++j) {
      m[j] = config.beta1 * m[j] + (1 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1 - config.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= config.alpha * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

double global_grad_norm(std::span<const Parameter* const> params) {
  double total = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double total = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) total += g * g;
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter* p : params) {
      for (double& g : p->grad.values()) g *= scale;
    }
  }
  return norm;
}

void save_adam_state(const AdamState& state, const ModelParams& params,
                     const std::filesystem::path& path) {
  const auto list = params.parameters();
  if (state.m.size() != list.size()) {
    throw std::invalid_argument("save_adam_state: state does not match parameters");
  }
  TensorFile file;
  file.header = {{"kind", "adam"}, {"step", std::to_string(state.step)}};
  for (std::size_t i = 0; i < list.size(); ++i) {
    file.records.push_back({"m." + list[i]->name, state.m[i]});
    file.records.push_back({"v." + list[i]->name, state.v[i]});
  }
  write_tensor_file(path, file);
}

AdamState load_adam_state(const ModelParams& params, const std::filesystem::path& path) {
  const TensorFile file = read_tensor_file(path);
  const std::string where = path.string();
  if (file.get("kind") != "adam") {
    throw CheckpointError(where + ": not an optimizer state file");
  }
  const auto step = file.get("step");
  AdamState state;
  try {
    state.step = std::stoull(step.value_or(""));
  } catch (const std::exception&) {
    throw CheckpointError(where + ": missing or bad step counter");
  }
  const auto list = params.parameters();
  if (file.records.size() != 2 * list.size()) {
    throw CheckpointError(where + ": optimizer state has " +
                          std::to_string(file.records.size()) + " tensors, expected " +
                          std::to_string(2 * list.size()));
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    const TensorRecord& m = file.records[2 * i];
    const TensorRecord& v = file.records[2 * i + 1];
    if (m.name != "m." + list[i]->name || v.name != "v." + list[i]->name ||
        m.value.dims() != list[i]->value.dims() || v.value.dims() != list[i]->value.dims()) {
      throw CheckpointError(where + ": optimizer state does not match parameter " +
                            list[i]->name);
    }
    state.m.push_back(m.value);
    state.v.push_back(v.value);
  }
  return state;
}

}  // namespace lencon
