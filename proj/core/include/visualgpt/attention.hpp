// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "visualgpt/tensor.hpp"

namespace vgpt {

struct AttentionConfig {
  std::size_t hidden = 0;
  std::size_t heads = 1;

  std::size_t head_dim() const { return hidden / heads; }
  /// Throws ConfigError unless hidden is a positive multiple of heads.
  void validate() const;
};

/// Square S x S projections. Rows are tokens, so projecting Q is Q * wq.
struct AttentionWeights {
  Tensor wq;
  Tensor wk;
  Tensor wv;
  Tensor wo;
};

/// Multi-head scaled dot-product attention:
/// softmax((Q wq)(K wk)^T / sqrt(d)) (V wv) per head, with d the per-head
/// width; heads are concatenated and projected by wo. `mask` (t x n, non-zero
/// = blocked) receives the masked logit before the softmax. When `probs` is
/// given, the per-head attention matrices are appended to it.
Tensor attn(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionWeights& w,
            const AttentionConfig& cfg, std::span<const std::uint8_t> mask = {},
            std::vector<Tensor>* probs = nullptr);

/// t x t mask blocking every position j > i.
std::vector<std::uint8_t> causal_mask(std::size_t t);

Tensor causal_self_attention(const Tensor& h, const AttentionWeights& w, const AttentionConfig& cfg,
                             std::vector<Tensor>* probs = nullptr);

/// Decoder states query the encoder output: attn(H, I, I), no mask.
Tensor enc_dec_attention(const Tensor& h, const Tensor& image, const AttentionWeights& w,
                         const AttentionConfig& cfg, std::vector<Tensor>* probs = nullptr);

}  // namespace vgpt
