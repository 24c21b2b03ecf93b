// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/bpe.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <json.hpp>

#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"

namespace vgpt {

namespace {

using Symbols = std::vector<std::string>;

Symbols split_chars(const std::string& chunk) {
  Symbols out;
  out.reserve(chunk.size());
  for (char c : chunk) out.emplace_back(1, c);
  return out;
}

void apply_merge(Symbols& syms, const std::string& left, const std::string& right) {
  if (syms.size() < 2) return;
  Symbols out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
      out.push_back(left + right);
      ++i;
    } else {
      out.push_back(std::move(syms[i]));
    }
  }
  syms = std::move(out);
}

}  // namespace

std::vector<std::string> pretokenize(const std::string& text) {
  std::vector<std::string> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    if (text[j] == ' ') ++j;
    if (j < text.size() && text[j] != ' ') {
      while (j < text.size() && text[j] != ' ') ++j;
    } else {
      // A space not followed by a word stands alone.
      j = i + 1;
    }
    chunks.push_back(text.substr(i, j - i));
    i = j;
  }
  return chunks;
}

BpeModel::BpeModel(std::vector<std::string> base_vocab, std::vector<std::pair<std::string, std::string>> merges)
    : base_vocab_(std::move(base_vocab)), merges_(std::move(merges)) {
  id_to_token_ = {"<bos>", "<eos>", "<pad>"};
  auto add = [this](const std::string& tok) {
    if (token_to_id_.count(tok)) return;
    token_to_id_[tok] = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(tok);
  };
  for (const auto& s : base_vocab_) {
    if (s.size() != 1) throw FormatError("bpe: base symbol '" + s + "' is not a single character");
    add(s);
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [l, rr] = merges_[r];
    if (!token_to_id_.count(l) || !token_to_id_.count(rr)) {
      throw FormatError("bpe: merge " + std::to_string(r) + " refers to unknown token");
    }
    merge_rank_.emplace(merges_[r], r);
    add(l + rr);
  }
}

TokenId BpeModel::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) throw LookupError("bpe: unknown token '" + token + "'");
  return it->second;
}

const std::string& BpeModel::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw LookupError("bpe: unknown id " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> BpeModel::encode(const std::string& text) const {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::string sym(1, text[i]);
    if (!token_to_id_.count(sym)) {
      throw TokenizationError("bpe: unknown symbol '" + sym + "' at byte offset " + std::to_string(i));
    }
  }
  std::vector<TokenId> ids{kBos};
  for (const auto& chunk : pretokenize(text)) {
    Symbols syms = split_chars(chunk);
    // Lowest-rank pair first; newly formed pairs always rank later than the
    // merge that formed them, so this equals replaying merges in order.
    while (syms.size() > 1) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = merge_rank_.find({syms[i], syms[i + 1]});
        if (it != merge_rank_.end()) best = std::min(best, it->second);
      }
      if (best == std::numeric_limits<std::size_t>::max()) break;
      apply_merge(syms, merges_[best].first, merges_[best].second);
    }
    for (const auto& s : syms) ids.push_back(token_to_id_.at(s));
  }
  ids.push_back(kEos);
  return ids;
}

std::string BpeModel::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const auto& tok = token(id);
    if (!is_special(id)) out += tok;
  }
  return out;
}

std::string BpeModel::to_json() const {
  nlohmann::json j;
  j["base_vocab"] = base_vocab_;
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [l, r] : merges_) merges.push_back({l, r});
  j["merges"] = merges;
  j["specials"] = {{"bos", kBos}, {"eos", kEos}, {"pad", kPad}};
  return j.dump();
}

BpeModel BpeModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& sp = j.at("specials");
    if (sp.at("bos").get<int>() != kBos || sp.at("eos").get<int>() != kEos || sp.at("pad").get<int>() != kPad) {
      throw FormatError("bpe: unsupported special id layout");
    }
    std::vector<std::pair<std::string, std::string>> merges;
    for (const auto& m : j.at("merges")) merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    return BpeModel(j.at("base_vocab").get<std::vector<std::string>>(), std::move(merges));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bpe: malformed model: ") + e.what());
  }
}

BpeModel bpe_train(std::span<const std::string> corpus, std::size_t num_merges) {
  if (corpus.empty()) throw ConfigError("bpe_train: empty corpus");
  std::map<std::string, std::size_t> chunk_counts;
  std::set<std::string> base;
  for (const auto& text : corpus) {
    for (char c : text) base.insert(std::string(1, c));
    for (auto& chunk : pretokenize(text)) ++chunk_counts[chunk];
  }
  std::vector<std::pair<Symbols, std::size_t>> words;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, count] : chunk_counts) words.emplace_back(split_chars(chunk), count);

  std::vector<std::pair<std::string, std::string>> merges;
  while (merges.size() < num_merges) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& [syms, count] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pair_counts[{syms[i], syms[i + 1]}] += count;
    if (pair_counts.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it)
      if (it->second > best->second) best = it;
    const auto chosen = best->first;
    merges.push_back(chosen);
    for (auto& [syms, count] : words) apply_merge(syms, chosen.first, chosen.second);
  }
  return BpeModel(std::vector<std::string>(base.begin(), base.end()), std::move(merges));
}

BpeModel load_bpe(const std::string& path) { return BpeModel::from_json(read_text_file(path)); }

void save_bpe(const std::string& path, const BpeModel& model) { write_text_atomic(path, model.to_json()); }

}  // namespace vgpt
