// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "visualgpt/error.hpp"

namespace vgpt {

double gradient_rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport finite_diff_check(const ScalarFn& f, Tensor x, double h, double tol,
                                  std::span<const std::size_t> indices,
                                  const std::function<bool(std::size_t)>& skip) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: step h must be positive");
  const bool was_trainable = x.requires_grad();
  std::vector<double> saved_grad(x.grad().begin(), x.grad().end());
  x.set_requires_grad(true);
  x.zero_grad();

  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f();
    tape.backward(y);
  }
  std::vector<double> analytic(x.grad().begin(), x.grad().end());

  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }

  GradCheckReport report;
  NoGradScope no_grad;
  auto values = x.mutable_data();
  for (std::size_t idx : indices) {
    if (skip && skip(idx)) {
      ++report.skipped;
      continue;
    }
    const double orig = values[idx];
    values[idx] = orig + h;
    const double fp = f().item();
    values[idx] = orig - h;
    const double fm = f().item();
    values[idx] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = gradient_rel_error(analytic[idx], numeric);
    ++report.checked;
    if (err > report.max_rel_error || report.checked == 1) {
      report.max_rel_error = std::max(report.max_rel_error, err);
      if (err >= report.max_rel_error) report.worst_index = idx;
    }
  }
  report.passed = report.max_rel_error < tol;

  if (was_trainable) {
    std::copy(saved_grad.begin(), saved_grad.end(), x.mutable_grad().begin());
  } else {
    x.set_requires_grad(false);
  }
  return report;
}

}  // namespace vgpt
