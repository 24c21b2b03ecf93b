// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/srau.hpp"

#include <cmath>

#include "visualgpt/error.hpp"
#include "visualgpt/ops.hpp"

namespace vgpt {

std::string to_string(GateKind kind) {
  switch (kind) {
    case GateKind::kOcg:
      return "ocg";
    case GateKind::kSrau:
      return "srau";
    case GateKind::kNormalizedSrau:
      return "normalized_srau";
  }
  return "unknown";
}

GateKind parse_gate_kind(const std::string& name) {
  if (name == "ocg") return GateKind::kOcg;
  if (name == "srau") return GateKind::kSrau;
  if (name == "normalized_srau" || name == "normalized-srau") return GateKind::kNormalizedSrau;
  throw ConfigError("unknown gate kind '" + name + "' (expected ocg, srau or normalized_srau)");
}

void GateConfig::validate() const {
  if (kind == GateKind::kOcg) return;
  if (!(tau >= 0.0 && tau < 0.5)) {
    throw ConfigError("gate: tau must lie in [0, 0.5), got " + std::to_string(tau));
  }
}

GatePair compute_gates(const Tensor& h, const GateConfig& cfg) {
  cfg.validate();
  const Tensor s = sigmoid(h);
  const Tensor one_minus_s = affine(s, -1.0, 1.0);
  if (cfg.kind == GateKind::kOcg) return {s, one_minus_s};
  const double tau = cfg.effective_tau();
  GatePair pair{threshold(s, tau), threshold(one_minus_s, tau)};
  if (cfg.kind == GateKind::kSrau) return pair;
  // tau < 0.5 keeps at least one gate above zero, so the sum is positive.
  const Tensor total = add(pair.b_vis, pair.b_lan);
  return {div(pair.b_vis, total), div(pair.b_lan, total)};
}

bool both_gates_zero(double h, const GateConfig& cfg) {
  NoGradScope no_grad;
  const auto gates = compute_gates(Tensor::scalar(h), cfg);
  return gates.b_vis.item() == 0.0 && gates.b_lan.item() == 0.0;
}

GatedOutput gated_cross_attention(const Tensor& h, std::span<const Tensor> image_layers,
                                  const GatedCrossAttentionParams& params, const AttentionConfig& attn_cfg,
                                  const GateConfig& gate_cfg, GateOverride override_gates) {
  if (image_layers.empty()) throw ContextError("gated_cross_attention: no encoder layers");
  const Tensor query =
      params.query_norm ? layer_norm(h, params.query_norm->gain, params.query_norm->bias) : h;
  std::vector<Tensor> per_layer;
  per_layer.reserve(image_layers.size());
  for (const auto& image : image_layers) {
    if (image.rank() != 2 || image.cols() != h.cols()) {
      throw DimensionError("gated_cross_attention: encoder layer " + to_string(image.shape()) +
                           " does not match decoder state " + to_string(h.shape()));
    }
    per_layer.push_back(enc_dec_attention(query, image, params.attention, attn_cfg));
  }
  const Tensor visual = per_layer.size() == 1 ? per_layer.front() : mean_of(per_layer);

  GatePair gates;
  if (override_gates == GateOverride::kVisualClosed) {
    gates = {Tensor::zeros(h.shape()), Tensor::filled(h.shape(), 1.0)};
  } else {
    gates = compute_gates(h, gate_cfg);
  }
  Tensor out = add(mul(gates.b_vis, visual), mul(gates.b_lan, h));
  if (params.output_norm) out = layer_norm(out, params.output_norm->gain, params.output_norm->bias);
  return {out, gates};
}

ResurrectionTrace resurrection_probe(const Tensor& h0, const GateConfig& cfg, std::size_t steps, double lr,
                                     double visual_signal) {
  cfg.validate();
  Tensor h = h0.clone();
  h.set_requires_grad(true);

  ResurrectionTrace trace;
  {
    NoGradScope no_grad;
    const auto gates = compute_gates(h, cfg);
    bool found = false;
    for (std::size_t i = 0; i < h.size() && !found; ++i) {
      if (gates.b_vis.data()[i] == 0.0 && gates.b_lan.data()[i] > 0.0) {
        trace.tracked_index = i;
        found = true;
      }
    }
    if (!found) {
      throw ContractError("resurrection_probe: no entry has a zero visual gate with a live linguistic gate");
    }
  }

  const Tensor signal = Tensor::filled(h.shape(), visual_signal);
  const std::size_t idx = trace.tracked_index;
  for (std::size_t step = 0; step <= steps; ++step) {
    h.zero_grad();
    Tape tape;
    GatePair gates;
    {
      TapeScope scope(tape);
      gates = compute_gates(h, cfg);
      const Tensor gated = add(mul(gates.b_vis, signal), mul(gates.b_lan, h));
      const Tensor loss = affine(sum(gated), -1.0);
      tape.backward(loss);
    }
    ResurrectionStep rec;
    rec.step = step;
    rec.h = h.data()[idx];
    rec.b_vis = gates.b_vis.data()[idx];
    rec.b_lan = gates.b_lan.data()[idx];
    rec.grad = h.grad()[idx];
    trace.steps.push_back(rec);
    if (!trace.revived_at && rec.b_vis > 0.0) {
      trace.revived_at = step;
      break;
    }
    if (step == steps) break;
    auto values = h.mutable_data();
    const auto g = h.grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * g[i];
  }
  return trace;
}

}  // namespace vgpt
