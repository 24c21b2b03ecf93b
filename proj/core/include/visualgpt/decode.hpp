// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "visualgpt/bpe.hpp"
#include "visualgpt/model.hpp"

namespace vgpt {

struct BeamHypothesis {
  std::vector<TokenId> tokens;  ///< generated tokens, BOS excluded, EOS included when finished
  double logprob = 0.0;         ///< sum of the per-step log-probabilities
  bool finished = false;
};

/// Log-probabilities over the vocabulary for the token after `prefix`
/// (prefix starts with BOS).
using LogProbFn = std::function<std::vector<double>(std::span<const TokenId> prefix)>;

/// Length-bounded beam search. Each step expands every live hypothesis over
/// the whole vocabulary and keeps the `beam_size` best candidates; those
/// ending in `eos` leave the beam as finished. Survivors after `max_len`
/// steps are returned unfinished. Ranking uses the raw cumulative
/// log-probability with ties broken by token-id order; the result holds at
/// most `beam_size` hypotheses, best first.
std::vector<BeamHypothesis> beam_search(const LogProbFn& logprobs, std::size_t beam_size, std::size_t max_len,
                                        TokenId bos = BpeModel::kBos,
                                        std::optional<TokenId> eos = BpeModel::kEos);

/// Argmax decoding (lowest id wins ties) until EOS or `max_len` tokens.
BeamHypothesis greedy_decode(const LogProbFn& logprobs, std::size_t max_len, TokenId bos = BpeModel::kBos,
                             std::optional<TokenId> eos = BpeModel::kEos);

/// Model-backed next-token function for captioning (`enc` set) or language
/// modelling (`enc` null).
LogProbFn model_logprobs(const Model& model, const EncoderOutput* enc, const DecoderOptions& options = {});

/// Beam search over the model; `max_len` is capped so that prefixes fit in
/// max_seq_len.
std::vector<BeamHypothesis> beam_search(const Model& model, const EncoderOutput& enc, std::size_t beam_size,
                                        std::size_t max_len);

}  // namespace vgpt
