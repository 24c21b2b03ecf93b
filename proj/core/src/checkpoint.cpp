// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/checkpoint.hpp"

#include <json.hpp>

#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"

namespace vgpt {

namespace {

using nlohmann::json;

json config_json(const ModelConfig& c) {
  json j;
  j["encoder_layers"] = c.encoder_layers;
  j["decoder_layers"] = c.decoder_layers;
  j["hidden"] = c.hidden;
  j["heads"] = c.heads;
  j["feature_dim"] = c.feature_dim;
  j["vocab_size"] = c.vocab_size;
  j["max_seq_len"] = c.max_seq_len;
  j["mlp_ratio"] = c.mlp_ratio;
  j["gate_kind"] = to_string(c.gate.kind);
  j["tau"] = c.gate.tau;
  return j;
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
  c.gate.kind = parse_gate_kind(j.at("gate_kind").get<std::string>());
  c.gate.tau = j.at("tau").get<double>();
  return c;
}

ModelMode parse_mode(const std::string& s) {
  if (s == "lm") return ModelMode::kLanguageModel;
  if (s == "captioner") return ModelMode::kCaptioner;
  throw FormatError("checkpoint: unknown model mode '" + s + "'");
}

Provenance parse_provenance(const std::string& s) {
  if (s == "fresh") return Provenance::kFresh;
  if (s == "pretrained") return Provenance::kPretrained;
  throw FormatError("checkpoint: unknown provenance '" + s + "'");
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, std::uint64_t seed, std::size_t epoch, std::string history_path) {
  return {model.config, model.params, std::move(history_path), seed, epoch};
}

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = config_json(ckpt.config);
  j["mode"] = to_string(ckpt.params.mode());
  j["seed"] = ckpt.seed;
  j["epoch"] = ckpt.epoch;
  j["history"] = ckpt.history_path;
  json tensors = json::object();
  json prov = json::object();
  for (const auto& [name, t] : ckpt.params.tensors()) {
    json e;
    e["shape"] = t.shape();
    e["data"] = std::vector<double>(t.data().begin(), t.data().end());
    tensors[name] = std::move(e);
    prov[name] = to_string(ckpt.params.provenance_of(name));
  }
  j["tensors"] = std::move(tensors);
  j["provenance"] = std::move(prov);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(origin + ": malformed checkpoint: " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError(origin + ": checkpoint format_version " + std::to_string(version) + ", expected " +
                        std::to_string(kCheckpointFormatVersion));
    }
    Checkpoint out;
    out.config = config_from(j.at("config"));
    out.seed = j.at("seed").get<std::uint64_t>();
    out.epoch = j.at("epoch").get<std::size_t>();
    out.history_path = j.at("history").get<std::string>();
    out.params.set_mode(parse_mode(j.at("mode").get<std::string>()));
    const auto& prov = j.at("provenance");
    for (const auto& [name, e] : j.at("tensors").items()) {
      auto shape = e.at("shape").get<Shape>();
      auto data = e.at("data").get<std::vector<double>>();
      if (numel(shape) != data.size()) {
        throw FormatError(origin + ": tensor '" + name + "' has " + std::to_string(data.size()) +
                          " values for shape " + to_string(shape));
      }
      out.params.set(name, Tensor(std::move(shape), std::move(data), true),
                     parse_provenance(prov.at(name).get<std::string>()));
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(origin + ": malformed checkpoint: " + e.what());
  }
}

void check_compatible(const Checkpoint& ckpt, const ModelConfig& expected) {
  ModelConfig probe = expected;
  // Shapes do not depend on the gate settings; skip their validation here.
  probe.gate = GateConfig{};
  const auto layout = Parameters::initialize(probe, ckpt.params.mode(), 0);
  const auto& have = ckpt.params.tensors();
  for (const auto& [name, t] : layout.tensors()) {
    auto it = have.find(name);
    if (it == have.end()) throw IncompatibilityError("checkpoint lacks tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw IncompatibilityError("tensor '" + name + "' has shape " + to_string(it->second.shape()) +
                                 ", config expects " + to_string(t.shape()));
    }
  }
  for (const auto& [name, _] : have) {
    if (!layout.contains(name)) throw IncompatibilityError("checkpoint has unexpected tensor '" + name + "'");
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_text_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(read_text_file(path), path); }

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  Checkpoint c = load_checkpoint(path);
  check_compatible(c, expected);
  return c;
}

}  // namespace vgpt
