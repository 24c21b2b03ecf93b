// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visualgpt/model.hpp"
#include "visualgpt/training.hpp"

namespace vgpt {

struct RunConfig {
  ModelConfig model = ModelConfig::desk_preset();
  TrainConfig train;
};

enum class ConfigSource { kDefault, kEnvironment, kFile, kFlag };
std::string to_string(ConfigSource s);

struct ResolvedConfig {
  RunConfig config;
  std::map<std::string, ConfigSource> sources;  ///< every known key
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys and
/// malformed lines throw ConfigError with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Layers values: built-in defaults, then SRAU_SEED (seed only), then the
/// config file, then flag overrides.
ResolvedConfig resolve_config(const std::optional<std::string>& config_path,
                              const std::map<std::string, std::string>& flags,
                              const std::optional<std::string>& env_seed);

/// resolve_config with SRAU_SEED read from the process environment.
ResolvedConfig resolve_config(const std::optional<std::string>& config_path,
                              const std::map<std::string, std::string>& flags);

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();
std::string config_value(const RunConfig& cfg, const std::string& key);

/// "key=value" flag into a pair; throws ConfigError on a missing '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);

}  // namespace vgpt
