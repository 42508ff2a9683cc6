#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/model.hpp"

namespace imbf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamGroupState {
  Matrix<T> m_weight, v_weight;
  std::vector<T> m_bias, v_bias;
  uint64_t step = 0;
};

template <typename T>
struct AdamState {
  std::vector<AdamGroupState<T>> groups;

  static AdamState zeros_like(const ParamSet<T>& params) {
    AdamState state;
    for (const auto& g : params.groups) {
      AdamGroupState<T> s;
      s.m_weight = Matrix<T>(g.weight.rows(), g.weight.cols());
      s.v_weight = Matrix<T>(g.weight.rows(), g.weight.cols());
      s.m_bias.assign(g.bias.size(), T{0});
      s.v_bias.assign(g.bias.size(), T{0});
      state.groups.push_back(std::move(s));
    }
    return state;
  }
};

namespace detail {

template <typename T>
void adam_update(T* theta, const T* grad, T* m, T* v, size_t n, uint64_t step, double lr,
                 const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (size_t i = 0; i < n; ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - lr * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

}  // namespace detail

// One Adam update, applied only to groups with trainable = true. Frozen
// groups and their optimizer state are untouched bit-exactly.
template <typename T>
void adam_step(ParamSet<T>& params, const GradientSet<T>& grads, AdamState<T>& state, double lr,
               const AdamConfig& cfg = {}) {
  if (grads.size() != params.groups.size() || state.groups.size() != params.groups.size()) {
    throw runtime_error(ErrorCode::DimMismatch, "adam_step: group count mismatch");
  }
  for (size_t g = 0; g < params.groups.size(); ++g) {
    auto& group = params.groups[g];
    if (!group.trainable) continue;
    auto& gs = state.groups[g];
    if (!grads[g].weight.same_shape(group.weight) || grads[g].bias.size() != group.bias.size()) {
      throw runtime_error(ErrorCode::DimMismatch, "adam_step: gradient shape mismatch");
    }
    gs.step++;
    detail::adam_update(group.weight.data(), grads[g].weight.data(), gs.m_weight.data(),
                        gs.v_weight.data(), group.weight.size(), gs.step, lr, cfg);
    detail::adam_update(group.bias.data(), grads[g].bias.data(), gs.m_bias.data(), gs.v_bias.data(),
                        group.bias.size(), gs.step, lr, cfg);
  }
}

}  // namespace imbf
