// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "visualgpt/attention.hpp"
#include "visualgpt/bpe.hpp"
#include "visualgpt/srau.hpp"
#include "visualgpt/tensor.hpp"

namespace vgpt {

struct ModelConfig {
  std::size_t encoder_layers = 2;  // K
  std::size_t decoder_layers = 4;  // M
  std::size_t hidden = 64;         // S
  std::size_t heads = 4;
  std::size_t feature_dim = 10;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 32;
  std::size_t mlp_ratio = 4;
  GateConfig gate;

  /// 3 encoder layers, 12 decoder layers, 12 heads, hidden size 768.
  static ModelConfig paper_preset();
  /// 2 encoder layers, 4 decoder layers, 4 heads, hidden size 64.
  static ModelConfig desk_preset();

  void validate() const;
  AttentionConfig attention() const { return {hidden, heads}; }

  bool operator==(const ModelConfig&) const = default;
};

enum class ModelMode {
  kLanguageModel,  ///< decoder only; no encoder, no cross-attention
  kCaptioner,
};

/// Where a parameter's current values came from.
enum class Provenance { kFresh, kPretrained };

std::string to_string(ModelMode mode);
std::string to_string(Provenance p);

/// Named parameter set. Names are stable and ordered, e.g. "dec.0.attn.wq".
class Parameters {
 public:
  Parameters() = default;

  /// Random initialization: normal(0, 0.02) for matrices and embeddings, zero
  /// biases, unit norm gains. Each tensor draws from a stream seeded by
  /// (seed, name), so a tensor's initial value does not depend on which
  /// other tensors exist.
  static Parameters initialize(const ModelConfig& cfg, ModelMode mode, std::uint64_t seed);

  ModelMode mode() const noexcept { return mode_; }
  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }
  const std::map<std::string, Provenance>& provenance() const noexcept { return provenance_; }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  Provenance provenance_of(const std::string& name) const;

  /// Inserts or replaces a tensor. Used by initialization and checkpoint loading.
  void set(const std::string& name, Tensor value, Provenance p);

  std::size_t scalar_count() const;
  void zero_grad();
  void set_requires_grad(bool on);
  /// Deep copy with fresh storage.
  Parameters clone() const;

  void set_mode(ModelMode mode) { mode_ = mode; }

 private:
  ModelMode mode_ = ModelMode::kCaptioner;
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, Provenance> provenance_;
};

struct Model {
  ModelConfig config;
  Parameters params;
};

Model make_model(const ModelConfig& cfg, ModelMode mode, std::uint64_t seed);

/// Output of every encoder layer; each entry is o x S.
struct EncoderOutput {
  std::vector<Tensor> layers;
};

/// Per-layer gate values recorded by a caption-mode decoder pass; each
/// tensor is t x S.
struct LayerGates {
  std::size_t layer = 0;
  Tensor b_vis;
  Tensor b_lan;
};

struct DecoderOptions {
  GateOverride gate_override = GateOverride::kNone;
  std::vector<LayerGates>* gate_sink = nullptr;
};

/// Projects o x feature_dim object features to S and applies K post-norm
/// transformer layers (self-attention + MLP), keeping every layer's output.
EncoderOutput encoder_forward(const Tensor& features, const Model& model);

/// Pre-norm GPT-style decoder. Each block runs causal self-attention with a
/// residual, then (when `enc` is given) the gated cross-attention sublayer,
/// then the MLP with a residual. Logits come from the tied token embedding.
Tensor decoder_forward(std::span<const TokenId> ids, const EncoderOutput* enc, const Model& model,
                       const DecoderOptions& options = {});

/// Log-probabilities of the token following `prefix` (which starts with BOS).
std::vector<double> next_token_logprobs(const Model& model, std::span<const TokenId> prefix,
                                        const EncoderOutput* enc, const DecoderOptions& options = {});

/// Captioner whose decoder, embeddings and norms are copied from `lm`; the
/// encoder and all cross-attention weights are freshly initialized from
/// `seed`. `cfg` must agree with the language model on every decoder field.
Model init_captioner_from_lm(const Model& lm, const ModelConfig& cfg, std::uint64_t seed);

/// Names of every parameter a captioner adds on top of the language model.
bool is_captioner_only(const std::string& name);

}  // namespace vgpt
