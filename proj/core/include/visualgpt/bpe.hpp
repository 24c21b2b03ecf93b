// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vgpt {

using TokenId = int;

/// Character-level byte pair encoding model.
///
/// Ids are laid out as: specials (BOS, EOS, PAD), then the base symbols in
/// sorted order, then one id per distinct merged token in merge order. Text
/// is pre-split into chunks of an optional leading space followed by a run of
/// non-space characters, and merges never cross a chunk boundary.
class BpeModel {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kPad = 2;

  BpeModel() = default;
  BpeModel(std::vector<std::string> base_vocab, std::vector<std::pair<std::string, std::string>> merges);

  const std::vector<std::string>& base_vocab() const noexcept { return base_vocab_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const noexcept { return merges_; }
  std::size_t vocab_size() const noexcept { return id_to_token_.size(); }

  /// Returns BOS, the merged tokens of `text`, then EOS.
  std::vector<TokenId> encode(const std::string& text) const;
  /// Concatenates token strings, dropping specials.
  std::string decode(std::span<const TokenId> ids) const;

  TokenId id(const std::string& token) const;
  bool has_token(const std::string& token) const { return token_to_id_.count(token) != 0; }
  const std::string& token(TokenId id) const;
  static bool is_special(TokenId id) noexcept { return id == kBos || id == kEos || id == kPad; }

  std::string to_json() const;
  static BpeModel from_json(const std::string& text);

 private:
  std::vector<std::string> base_vocab_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> id_to_token_;
  std::map<std::string, TokenId> token_to_id_;
  std::map<std::pair<std::string, std::string>, std::size_t> merge_rank_;
};

/// Splits text into BPE chunks (optional leading space + non-space run).
std::vector<std::string> pretokenize(const std::string& text);

/// Greedy BPE training: repeatedly merges the most frequent adjacent pair,
/// breaking frequency ties by the lexicographically smallest pair. Stops
/// early when no pair remains.
BpeModel bpe_train(std::span<const std::string> corpus, std::size_t num_merges);

BpeModel load_bpe(const std::string& path);
void save_bpe(const std::string& path, const BpeModel& model);

}  // namespace vgpt
