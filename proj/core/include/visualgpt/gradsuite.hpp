// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "visualgpt/model.hpp"

namespace vgpt {

struct GroupCheck {
  std::string group;
  double max_rel_error = 0.0;
  std::size_t points = 0;   ///< random input draws
  std::size_t checked = 0;  ///< coordinates compared
  std::size_t skipped = 0;  ///< coordinates whose +-h step crosses a gate threshold
  std::string worst;        ///< where max_rel_error occurred
};

struct GradSuiteOptions {
  std::size_t points = 20;
  std::uint64_t seed = 0;
  double h = 1e-5;
  /// Step for the full loss. Roundoff in a central difference grows like
  /// eps * |loss| / h, and the caption loss is one to two orders of
  /// magnitude larger than the primitive probes.
  double xe_h = 3e-4;
};

/// Central-difference checks of every differentiable primitive, the
/// attention functions, the gate rules and the gated sublayer, each at
/// `points` random inputs. Gate coordinates within h of a threshold are
/// skipped.
std::vector<GroupCheck> primitive_gradient_suite(const GradSuiteOptions& opts = {});

/// The full caption XE loss of a model built from `cfg`. Each point draws a
/// new image and caption; every parameter tensor is probed at
/// `coords_per_tensor` random coordinates spread over the points.
/// Coordinates whose perturbation changes which gate entries are zero are
/// skipped.
///
/// At initialization many gradients (encoder attention in particular) are
/// around 1e-9, below the resolution of a central difference on a loss of
/// order 10. `weight_noise` adds N(0, weight_noise^2) to every parameter
/// first so that the comparison measures the derivative, not roundoff.
GroupCheck xe_gradient_check(const ModelConfig& cfg, const GradSuiteOptions& opts = {},
                             std::size_t coords_per_tensor = 3, double weight_noise = 0.2);

}  // namespace vgpt
