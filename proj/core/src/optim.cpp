// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/optim.hpp"

#include <cmath>

#include "visualgpt/error.hpp"

namespace vgpt {

namespace {

void require_finite(std::span<const double> grad, const std::string& name) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("adamw: non-finite gradient " + std::to_string(grad[i]) + " in '" + name + "' at index " +
                         std::to_string(i) + "; step aborted");
    }
  }
}

}  // namespace

void adamw_step(std::span<double> param, std::span<const double> grad, AdamState& state, double lr,
                const AdamHyper& h) {
  if (grad.size() != param.size()) throw DimensionError("adamw: gradient size does not match parameter");
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  if (state.m.size() != param.size()) throw DimensionError("adamw: optimizer state does not match parameter");
  require_finite(grad, "<tensor>");

  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    param[i] -= lr * h.weight_decay * param[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grad[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

void AdamW::step(Parameters& params, double lr) {
  for (const auto& [name, t] : params.tensors()) {
    if (t.requires_grad() && t.has_grad()) require_finite(t.grad(), name);
  }
  for (auto& [name, t] : params.tensors()) {
    if (!t.requires_grad() || !t.has_grad()) continue;
    Tensor handle = t;
    adamw_step(handle.mutable_data(), t.grad(), state_[name], lr, hyper_);
  }
  ++steps_;
}

double grad_norm(const Parameters& params) {
  double total = 0.0;
  for (const auto& [_, t] : params.tensors()) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(Parameters& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& [_, t] : params.tensors()) {
      if (!t.has_grad()) continue;
      Tensor handle = t;
      for (double& g : handle.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

}  // namespace vgpt
