// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "visualgpt/tensor.hpp"

namespace vgpt {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool passed = true;
};

/// Scalar-valued function of the tensors it closes over.
using ScalarFn = std::function<Tensor()>;

/// Compares the analytic gradient of `f` with respect to `x` against central
/// differences (f(x+h) - f(x-h)) / 2h. The relative error of an entry is
/// |a - n| / max(|a|, |n|, 1e-8); the check passes when every entry is below
/// `tol`.
///
/// `indices` restricts the comparison to selected flat positions of `x`
/// (all positions when empty). `skip` may exclude positions, e.g. points that
/// sit on a non-differentiable boundary.
GradCheckReport finite_diff_check(const ScalarFn& f, Tensor x, double h = 1e-5, double tol = 1e-4,
                                  std::span<const std::size_t> indices = {},
                                  const std::function<bool(std::size_t)>& skip = {});

/// Relative error used by `finite_diff_check`.
double gradient_rel_error(double analytic, double numeric);

}  // namespace vgpt
