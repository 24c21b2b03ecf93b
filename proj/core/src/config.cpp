// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"

namespace vgpt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double d) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VGPT_SIZE(path) \
  Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_size(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.path); }}
#define VGPT_DOUBLE(path) \
  Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_double(k, v); }, \
        [](const RunConfig& c) { return fmt(c.path); }}
#define VGPT_BOOL(path) \
  Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_bool(k, v); }, \
        [](const RunConfig& c) { return std::string(c.path ? "true" : "false"); }}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f{
      {"encoder_layers", VGPT_SIZE(model.encoder_layers)},
      {"decoder_layers", VGPT_SIZE(model.decoder_layers)},
      {"hidden", VGPT_SIZE(model.hidden)},
      {"heads", VGPT_SIZE(model.heads)},
      {"feature_dim", VGPT_SIZE(model.feature_dim)},
      {"vocab_size", VGPT_SIZE(model.vocab_size)},
      {"max_seq_len", VGPT_SIZE(model.max_seq_len)},
      {"mlp_ratio", VGPT_SIZE(model.mlp_ratio)},
      {"gate_kind", Field{[](RunConfig& c, const std::string&, const std::string& v) {
                            c.model.gate.kind = parse_gate_kind(v);
                          },
                          [](const RunConfig& c) { return to_string(c.model.gate.kind); }}},
      {"tau", VGPT_DOUBLE(model.gate.tau)},
      {"lr_xe", VGPT_DOUBLE(train.lr_xe)},
      {"lr_rl", VGPT_DOUBLE(train.lr_rl)},
      {"batch_size", VGPT_SIZE(train.batch_size)},
      {"beam_size", VGPT_SIZE(train.beam_size)},
      {"scst_samples", VGPT_SIZE(train.scst_samples)},
      {"weight_decay", VGPT_DOUBLE(train.weight_decay)},
      {"beta1", VGPT_DOUBLE(train.beta1)},
      {"beta2", VGPT_DOUBLE(train.beta2)},
      {"eps", VGPT_DOUBLE(train.eps)},
      {"epochs", VGPT_SIZE(train.epochs)},
      {"seed", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_u64(k, v); },
                     [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      {"max_len", VGPT_SIZE(train.max_len)},
      {"clip_norm", VGPT_DOUBLE(train.clip_norm)},
      {"stochastic_scst", VGPT_BOOL(train.stochastic_scst)},
      {"greedy_eval", VGPT_BOOL(train.greedy_eval)},
  };
  return f;
}

#undef VGPT_SIZE
#undef VGPT_DOUBLE
#undef VGPT_BOOL

}  // namespace

std::string to_string(ConfigSource s) {
  switch (s) {
    case ConfigSource::kDefault:
      return "default";
    case ConfigSource::kEnvironment:
      return "env";
    case ConfigSource::kFile:
      return "file";
    case ConfigSource::kFlag:
      return "flag";
  }
  return "unknown";
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : fields()) keys.push_back(k);
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

std::string config_value(const RunConfig& cfg, const std::string& key) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  auto key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    try {
      auto [k, v] = split_assignment(line);
      if (!fields().count(k)) throw ConfigError("unknown config key '" + k + "'");
      out[k] = v;
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

ResolvedConfig resolve_config(const std::optional<std::string>& config_path,
                              const std::map<std::string, std::string>& flags,
                              const std::optional<std::string>& env_seed) {
  ResolvedConfig r;
  for (const auto& k : config_keys()) r.sources[k] = ConfigSource::kDefault;
  if (env_seed) {
    apply_setting(r.config, "seed", *env_seed);
    r.sources["seed"] = ConfigSource::kEnvironment;
  }
  if (config_path) {
    for (const auto& [k, v] : parse_config_text(read_text_file(*config_path), *config_path)) {
      apply_setting(r.config, k, v);
      r.sources[k] = ConfigSource::kFile;
    }
  }
  for (const auto& [k, v] : flags) {
    apply_setting(r.config, k, v);
    r.sources[k] = ConfigSource::kFlag;
  }
  return r;
}

ResolvedConfig resolve_config(const std::optional<std::string>& config_path,
                              const std::map<std::string, std::string>& flags) {
  std::optional<std::string> env;
  if (const char* s = std::getenv("SRAU_SEED"); s != nullptr && *s != '\0') env = s;
  return resolve_config(config_path, flags, env);
}

}  // namespace vgpt
