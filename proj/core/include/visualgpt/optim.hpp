// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "visualgpt/model.hpp"

namespace vgpt {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;
};

/// One AdamW update of a single tensor. Decay is decoupled and applied
/// first: theta -= lr * wd * theta, then the bias-corrected Adam delta.
/// A non-finite gradient throws NumericError and leaves everything untouched.
void adamw_step(std::span<double> param, std::span<const double> grad, AdamState& state, double lr,
                const AdamHyper& hyper);

/// AdamW over a named parameter set. The whole step is rejected if any
/// gradient entry is non-finite.
class AdamW {
 public:
  explicit AdamW(AdamHyper hyper = {}) : hyper_(hyper) {}

  void step(Parameters& params, double lr);
  std::size_t steps() const noexcept { return steps_; }
  const AdamHyper& hyper() const noexcept { return hyper_; }

 private:
  AdamHyper hyper_;
  std::map<std::string, AdamState> state_;
  std::size_t steps_ = 0;
};

/// Global L2 norm of all gradients.
double grad_norm(const Parameters& params);
/// Rescales gradients so their global norm is at most `max_norm`; returns
/// the norm before clipping.
double clip_grad_norm(Parameters& params, double max_norm);

}  // namespace vgpt
