// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/attention.hpp"

#include <cmath>
#include <string>

#include "visualgpt/error.hpp"
#include "visualgpt/ops.hpp"

namespace vgpt {

void AttentionConfig::validate() const {
  if (hidden == 0 || heads == 0 || hidden % heads != 0) {
    throw ConfigError("attention: hidden size " + std::to_string(hidden) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

namespace {

void check_operand(const Tensor& x, std::size_t hidden, const char* name) {
  if (x.rank() != 2 || x.cols() != hidden) {
    throw DimensionError(std::string("attn: ") + name + " has shape " + to_string(x.shape()) + ", expected [n x " +
                         std::to_string(hidden) + "]");
  }
}

void check_weight(const Tensor& w, std::size_t hidden, const char* name) {
  if (w.rank() != 2 || w.rows() != hidden || w.cols() != hidden) {
    throw DimensionError(std::string("attn: ") + name + " has shape " + to_string(w.shape()) + ", expected [" +
                         std::to_string(hidden) + "x" + std::to_string(hidden) + "]");
  }
}

}  // namespace

Tensor attn(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionWeights& w,
            const AttentionConfig& cfg, std::span<const std::uint8_t> mask, std::vector<Tensor>* probs) {
  cfg.validate();
  const std::size_t s = cfg.hidden;
  check_operand(q, s, "Q");
  check_operand(k, s, "K");
  check_operand(v, s, "V");
  if (k.rows() != v.rows()) {
    throw DimensionError("attn: K " + to_string(k.shape()) + " and V " + to_string(v.shape()) + " differ in rows");
  }
  check_weight(w.wq, s, "wq");
  check_weight(w.wk, s, "wk");
  check_weight(w.wv, s, "wv");
  check_weight(w.wo, s, "wo");
  if (!mask.empty() && mask.size() != q.rows() * k.rows()) {
    throw DimensionError("attn: mask of " + std::to_string(mask.size()) + " entries for " +
                         std::to_string(q.rows()) + "x" + std::to_string(k.rows()) + " scores");
  }

  const Tensor qp = matmul(q, w.wq);
  const Tensor kp = matmul(k, w.wk);
  const Tensor vp = matmul(v, w.wv);
  const std::size_t d = cfg.head_dim();
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<Tensor> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Tensor qh = slice_cols(qp, h * d, (h + 1) * d);
    const Tensor kh = slice_cols(kp, h * d, (h + 1) * d);
    const Tensor vh = slice_cols(vp, h * d, (h + 1) * d);
    Tensor scores = affine(matmul(qh, transpose(kh)), inv_scale);
    if (!mask.empty()) scores = mask_fill(scores, mask);
    Tensor p = softmax(scores, -1);
    if (probs) probs->push_back(p);
    heads.push_back(matmul(p, vh));
  }
  const Tensor joined = cfg.heads == 1 ? heads.front() : concat(heads, 1);
  return matmul(joined, w.wo);
}

std::vector<std::uint8_t> causal_mask(std::size_t t) {
  std::vector<std::uint8_t> mask(t * t, 0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = i + 1; j < t; ++j) mask[i * t + j] = 1;
  return mask;
}

Tensor causal_self_attention(const Tensor& h, const AttentionWeights& w, const AttentionConfig& cfg,
                             std::vector<Tensor>* probs) {
  const auto mask = causal_mask(h.rows());
  return attn(h, h, h, w, cfg, mask, probs);
}

Tensor enc_dec_attention(const Tensor& h, const Tensor& image, const AttentionWeights& w,
                         const AttentionConfig& cfg, std::vector<Tensor>* probs) {
  if (image.rank() != 2 || image.rows() == 0) throw ContextError("enc_dec_attention: empty encoder context");
  return attn(h, image, image, w, cfg, {}, probs);
}

}  // namespace vgpt
