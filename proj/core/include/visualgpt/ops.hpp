// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "visualgpt/tensor.hpp"

namespace vgpt {

/// Value written by `mask_fill` in place of -infinity before a softmax.
inline constexpr double kMaskedLogit = -1e9;

// Differentiable primitives. Each records itself on the active tape when an
// input requires a gradient. Binary elementwise operations require identical
// shapes; the only broadcast supported is `add_bias` (row vector over rows).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// scale * x + shift, elementwise.
Tensor affine(const Tensor& x, double scale, double shift = 0.0);

Tensor sigmoid(const Tensor& x);
/// tanh approximation used by GPT-2.
Tensor gelu(const Tensor& x);
/// x where x > tau, else 0. The derivative is 1 on the open region x > tau
/// and 0 on the closed region x <= tau, including the boundary itself.
Tensor threshold(const Tensor& x, double tau);

/// Max-subtracted softmax along `axis` (negative values count from the back).
Tensor softmax(const Tensor& x, int axis = -1);
Tensor log_softmax(const Tensor& x);
/// Normalizes over the last dimension, then applies gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// Replaces entries where `mask` is non-zero by `value`. `mask` either covers
/// the whole tensor or a single row that is repeated over every row.
Tensor mask_fill(const Tensor& x, std::span<const std::uint8_t> mask, double value = kMaskedLogit);

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
/// out[i] = x[i, index[i]].
Tensor pick(const Tensor& x, std::span<const int> index);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Elementwise arithmetic mean of same-shaped tensors.
Tensor mean_of(std::span<const Tensor> xs);

}  // namespace vgpt
