// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "visualgpt/model.hpp"

namespace vgpt {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  std::string history_path;  ///< where the training history of this run lives, if any
  std::uint64_t seed = 0;
  std::size_t epoch = 0;

  Model model() const { return {config, params}; }
};

Checkpoint make_checkpoint(const Model& model, std::uint64_t seed, std::size_t epoch = 0,
                           std::string history_path = {});

/// Tensors are written as shortest round-trip decimals, so loading restores
/// every value bit for bit and a reload-resave produces identical bytes.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text, const std::string& origin = "<memory>");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
/// Also checks the stored tensors against the layout `expected` implies;
/// the first tensor that is missing, extra or differently shaped is named.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

void check_compatible(const Checkpoint& ckpt, const ModelConfig& expected);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace vgpt
