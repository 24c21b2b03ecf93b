// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/model.hpp"

#include <numeric>
#include <random>

#include "visualgpt/error.hpp"
#include "visualgpt/ops.hpp"

namespace vgpt {

namespace {

constexpr double kInitStd = 0.02;

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor normal_init(const Shape& shape, const std::string& name, std::uint64_t seed) {
  std::mt19937_64 rng(fnv1a(name, seed));
  std::normal_distribution<double> dist(0.0, kInitStd);
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = dist(rng);
  return Tensor(shape, std::move(data), true);
}

std::string layer_prefix(const char* stack, std::size_t i) { return std::string(stack) + "." + std::to_string(i) + "."; }

struct Builder {
  Parameters& params;
  std::uint64_t seed;

  void matrix(const std::string& name, std::size_t r, std::size_t c) {
    params.set(name, normal_init({r, c}, name, seed), Provenance::kFresh);
  }
  void zeros(const std::string& name, std::size_t n) {
    params.set(name, Tensor::zeros({n}, true), Provenance::kFresh);
  }
  void ones(const std::string& name, std::size_t n) {
    Tensor t = Tensor::filled({n}, 1.0);
    t.set_requires_grad(true);
    params.set(name, t, Provenance::kFresh);
  }
  void norm(const std::string& p, std::size_t s) {
    ones(p + "g", s);
    zeros(p + "b", s);
  }
  void attention(const std::string& p, std::size_t s) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) matrix(p + w, s, s);
  }
  void mlp(const std::string& p, std::size_t s, std::size_t inner) {
    matrix(p + "w1", s, inner);
    zeros(p + "b1", inner);
    matrix(p + "w2", inner, s);
    zeros(p + "b2", s);
  }
};

AttentionWeights attention_weights(const Model& m, const std::string& p) {
  const auto& ps = m.params;
  return {ps.at(p + "wq"), ps.at(p + "wk"), ps.at(p + "wv"), ps.at(p + "wo")};
}

Tensor norm(const Model& m, const std::string& p, const Tensor& x) {
  return layer_norm(x, m.params.at(p + "g"), m.params.at(p + "b"));
}

Tensor mlp(const Model& m, const std::string& p, const Tensor& x) {
  const auto& ps = m.params;
  const Tensor inner = gelu(add_bias(matmul(x, ps.at(p + "w1")), ps.at(p + "b1")));
  return add_bias(matmul(inner, ps.at(p + "w2")), ps.at(p + "b2"));
}

}  // namespace

ModelConfig ModelConfig::paper_preset() {
  ModelConfig c;
  c.encoder_layers = 3;
  c.decoder_layers = 12;
  c.heads = 12;
  c.hidden = 768;
  return c;
}

ModelConfig ModelConfig::desk_preset() {
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 4;
  c.heads = 4;
  c.hidden = 64;
  return c;
}

void ModelConfig::validate() const {
  if (encoder_layers < 1) throw ConfigError("model: encoder_layers must be >= 1");
  if (decoder_layers < 1) throw ConfigError("model: decoder_layers must be >= 1");
  attention().validate();
  if (feature_dim == 0) throw ConfigError("model: feature_dim must be positive");
  if (vocab_size == 0) throw ConfigError("model: vocab_size must be positive");
  if (max_seq_len == 0) throw ConfigError("model: max_seq_len must be positive");
  if (mlp_ratio == 0) throw ConfigError("model: mlp_ratio must be positive");
  gate.validate();
}

std::string to_string(ModelMode mode) { return mode == ModelMode::kLanguageModel ? "lm" : "captioner"; }

std::string to_string(Provenance p) { return p == Provenance::kFresh ? "fresh" : "pretrained"; }

const Tensor& Parameters::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LookupError("parameters: no tensor named '" + name + "'");
  return it->second;
}

Tensor& Parameters::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LookupError("parameters: no tensor named '" + name + "'");
  return it->second;
}

Provenance Parameters::provenance_of(const std::string& name) const {
  auto it = provenance_.find(name);
  if (it == provenance_.end()) throw LookupError("parameters: no tensor named '" + name + "'");
  return it->second;
}

void Parameters::set(const std::string& name, Tensor value, Provenance p) {
  tensors_[name] = std::move(value);
  provenance_[name] = p;
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void Parameters::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

void Parameters::set_requires_grad(bool on) {
  for (auto& [_, t] : tensors_) t.set_requires_grad(on);
}

Parameters Parameters::clone() const {
  Parameters out;
  out.mode_ = mode_;
  for (const auto& [name, t] : tensors_) {
    Tensor c = t.clone();
    c.set_requires_grad(t.requires_grad());
    out.tensors_[name] = c;
  }
  out.provenance_ = provenance_;
  return out;
}

Parameters Parameters::initialize(const ModelConfig& cfg, ModelMode mode, std::uint64_t seed) {
  cfg.validate();
  Parameters ps;
  ps.mode_ = mode;
  Builder b{ps, seed};
  const std::size_t s = cfg.hidden;
  const std::size_t inner = cfg.mlp_ratio * s;

  b.matrix("tok_emb", cfg.vocab_size, s);
  b.matrix("pos_emb", cfg.max_seq_len, s);
  for (std::size_t m = 0; m < cfg.decoder_layers; ++m) {
    const auto p = layer_prefix("dec", m);
    b.norm(p + "ln1.", s);
    b.attention(p + "attn.", s);
    b.norm(p + "ln2.", s);
    b.mlp(p + "mlp.", s, inner);
    if (mode == ModelMode::kCaptioner) {
      b.norm(p + "xln.", s);
      b.attention(p + "xattn.", s);
    }
  }
  b.norm("dec.ln_f.", s);

  if (mode == ModelMode::kCaptioner) {
    b.matrix("enc.in.w", cfg.feature_dim, s);
    b.zeros("enc.in.b", s);
    for (std::size_t k = 0; k < cfg.encoder_layers; ++k) {
      const auto p = layer_prefix("enc", k);
      b.attention(p + "attn.", s);
      b.norm(p + "ln1.", s);
      b.mlp(p + "mlp.", s, inner);
      b.norm(p + "ln2.", s);
    }
  }
  return ps;
}

Model make_model(const ModelConfig& cfg, ModelMode mode, std::uint64_t seed) {
  return {cfg, Parameters::initialize(cfg, mode, seed)};
}

bool is_captioner_only(const std::string& name) {
  return name.rfind("enc.", 0) == 0 || name.find(".xattn.") != std::string::npos ||
         name.find(".xln.") != std::string::npos;
}

EncoderOutput encoder_forward(const Tensor& features, const Model& model) {
  const auto& cfg = model.config;
  if (model.params.mode() != ModelMode::kCaptioner) throw ContractError("encoder_forward: model has no encoder");
  if (features.rank() != 2 || features.rows() == 0) throw ContextError("encoder_forward: image has no objects");
  if (features.cols() != cfg.feature_dim) {
    throw DimensionError("encoder_forward: features " + to_string(features.shape()) + " but feature_dim is " +
                         std::to_string(cfg.feature_dim));
  }
  const auto attn_cfg = cfg.attention();
  Tensor x = add_bias(matmul(features, model.params.at("enc.in.w")), model.params.at("enc.in.b"));
  EncoderOutput out;
  out.layers.reserve(cfg.encoder_layers);
  for (std::size_t k = 0; k < cfg.encoder_layers; ++k) {
    const auto p = layer_prefix("enc", k);
    const Tensor a = attn(x, x, x, attention_weights(model, p + "attn."), attn_cfg);
    x = norm(model, p + "ln1.", add(x, a));
    x = norm(model, p + "ln2.", add(x, mlp(model, p + "mlp.", x)));
    out.layers.push_back(x);
  }
  return out;
}

Tensor decoder_forward(std::span<const TokenId> ids, const EncoderOutput* enc, const Model& model,
                       const DecoderOptions& options) {
  const auto& cfg = model.config;
  const std::size_t t = ids.size();
  if (t == 0) throw LengthError("decoder_forward: empty token sequence");
  if (t > cfg.max_seq_len) {
    throw LengthError("decoder_forward: sequence of " + std::to_string(t) + " tokens exceeds max_seq_len " +
                      std::to_string(cfg.max_seq_len));
  }
  if (enc != nullptr && model.params.mode() != ModelMode::kCaptioner) {
    throw ContractError("decoder_forward: language model has no cross-attention");
  }
  const auto attn_cfg = cfg.attention();
  const Tensor& tok_emb = model.params.at("tok_emb");
  std::vector<int> positions(t);
  std::iota(positions.begin(), positions.end(), 0);
  Tensor x = add(embedding_lookup(tok_emb, ids), embedding_lookup(model.params.at("pos_emb"), positions));

  for (std::size_t m = 0; m < cfg.decoder_layers; ++m) {
    const auto p = layer_prefix("dec", m);
    x = add(x, causal_self_attention(norm(model, p + "ln1.", x), attention_weights(model, p + "attn."), attn_cfg));
    if (enc != nullptr) {
      GatedCrossAttentionParams xp{attention_weights(model, p + "xattn."),
                                   NormParams{model.params.at(p + "xln.g"), model.params.at(p + "xln.b")},
                                   std::nullopt};
      auto gated = gated_cross_attention(x, enc->layers, xp, attn_cfg, cfg.gate, options.gate_override);
      if (options.gate_sink) options.gate_sink->push_back({m, gated.gates.b_vis, gated.gates.b_lan});
      x = gated.output;
    }
    x = add(x, mlp(model, p + "mlp.", norm(model, p + "ln2.", x)));
  }
  x = norm(model, "dec.ln_f.", x);
  return matmul(x, transpose(tok_emb));
}

std::vector<double> next_token_logprobs(const Model& model, std::span<const TokenId> prefix,
                                        const EncoderOutput* enc, const DecoderOptions& options) {
  if (prefix.empty()) throw ContractError("next_token_logprobs: prefix must start with BOS");
  NoGradScope no_grad;
  const Tensor logits = decoder_forward(prefix, enc, model, options);
  const Tensor last = log_softmax(slice_rows(logits, logits.rows() - 1, logits.rows()));
  return {last.data().begin(), last.data().end()};
}

Model init_captioner_from_lm(const Model& lm, const ModelConfig& cfg, std::uint64_t seed) {
  if (lm.params.mode() != ModelMode::kLanguageModel) {
    throw IncompatibilityError("init_captioner_from_lm: source is not a language model");
  }
  const auto& a = lm.config;
  auto require = [](bool ok, const char* field) {
    if (!ok) throw IncompatibilityError(std::string("init_captioner_from_lm: field '") + field + "' differs");
  };
  require(a.decoder_layers == cfg.decoder_layers, "decoder_layers");
  require(a.hidden == cfg.hidden, "hidden");
  require(a.heads == cfg.heads, "heads");
  require(a.vocab_size == cfg.vocab_size, "vocab_size");
  require(a.max_seq_len == cfg.max_seq_len, "max_seq_len");
  require(a.mlp_ratio == cfg.mlp_ratio, "mlp_ratio");

  Model out = make_model(cfg, ModelMode::kCaptioner, seed);
  for (const auto& [name, tensor] : lm.params.tensors()) {
    if (!out.params.contains(name) || out.params.at(name).shape() != tensor.shape()) {
      throw IncompatibilityError("init_captioner_from_lm: tensor '" + name + "' has no counterpart");
    }
    Tensor copy = tensor.clone();
    copy.set_requires_grad(true);
    out.params.set(name, copy, Provenance::kPretrained);
  }
  return out;
}

}  // namespace vgpt
