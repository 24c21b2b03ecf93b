// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "visualgpt/attention.hpp"
#include "visualgpt/tensor.hpp"

namespace vgpt {

/// Complementary gating rule between the visual and linguistic paths.
enum class GateKind {
  kOcg,             ///< sigma(H) and 1 - sigma(H)
  kSrau,            ///< thresholded pair, each zeroed unless it exceeds tau
  kNormalizedSrau,  ///< SRAU pair divided by its elementwise sum
};

std::string to_string(GateKind kind);
GateKind parse_gate_kind(const std::string& name);

struct GateConfig {
  GateKind kind = GateKind::kSrau;
  double tau = 0.2;

  /// tau used by the gating rule; OCG ignores the configured value.
  double effective_tau() const { return kind == GateKind::kOcg ? 0.0 : tau; }
  /// Throws ConfigError unless 0 <= tau < 0.5.
  void validate() const;
};

struct GatePair {
  Tensor b_vis;
  Tensor b_lan;
};

/// Elementwise gates from the decoder state:
///   SRAU  b_vis = s * 1(s > tau),  b_lan = (1 - s) * 1(1 - s > tau),  s = sigmoid(H)
///   OCG   b_vis = s,               b_lan = 1 - s
///   NORMALIZED  the SRAU pair divided by (b_vis + b_lan)
/// Gradients through the indicator are zero on the closed off-region.
GatePair compute_gates(const Tensor& h, const GateConfig& cfg);

/// True when the gate rule outputs zero on both paths for the scalar input h.
bool both_gates_zero(double h, const GateConfig& cfg);

/// Replaces the computed gates. `kVisualClosed` sets b_vis = 0 and b_lan = 1,
/// which turns the gated sublayer into the identity on H.
enum class GateOverride { kNone, kVisualClosed };

struct NormParams {
  Tensor gain;
  Tensor bias;
};

struct GatedCrossAttentionParams {
  AttentionWeights attention;
  /// Normalizes H before it is used as the attention query.
  std::optional<NormParams> query_norm;
  /// Layer normalization applied to the gated sum.
  std::optional<NormParams> output_norm;
};

struct GatedOutput {
  Tensor output;
  GatePair gates;
};

/// B_vis * mean_k EncDecAttn(H, I_k) + B_lan * H over every encoder layer
/// I_k (meshed connection with uniform weights), followed by `output_norm`
/// when present.
GatedOutput gated_cross_attention(const Tensor& h, std::span<const Tensor> image_layers,
                                  const GatedCrossAttentionParams& params, const AttentionConfig& attn_cfg,
                                  const GateConfig& gate_cfg, GateOverride override_gates = GateOverride::kNone);

struct ResurrectionStep {
  std::size_t step = 0;
  double h = 0.0;
  double b_vis = 0.0;
  double b_lan = 0.0;
  double grad = 0.0;  ///< d loss / d h of the tracked entry
};

struct ResurrectionTrace {
  std::size_t tracked_index = 0;
  std::vector<ResurrectionStep> steps;
  /// First step at which the tracked entry's b_vis is non-zero again.
  std::optional<std::size_t> revived_at;
};

/// Gradient descent on loss = -sum(b_vis * visual_signal + b_lan * H), the
/// gated output of a sublayer whose attention result is the constant
/// `visual_signal`. Tracks the first entry of `h0` whose visual gate is zero
/// while its linguistic gate is live; requires such an entry to exist.
ResurrectionTrace resurrection_probe(const Tensor& h0, const GateConfig& cfg, std::size_t steps, double lr,
                                     double visual_signal = 1.0);

}  // namespace vgpt
