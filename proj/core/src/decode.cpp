// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/decode.hpp"

#include <algorithm>

#include "visualgpt/error.hpp"

namespace vgpt {

namespace {

bool ranks_before(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

std::vector<TokenId> with_bos(TokenId bos, const std::vector<TokenId>& tokens) {
  std::vector<TokenId> prefix;
  prefix.reserve(tokens.size() + 1);
  prefix.push_back(bos);
  prefix.insert(prefix.end(), tokens.begin(), tokens.end());
  return prefix;
}

}  // namespace

std::vector<BeamHypothesis> beam_search(const LogProbFn& logprobs, std::size_t beam_size, std::size_t max_len,
                                        TokenId bos, std::optional<TokenId> eos) {
  if (beam_size == 0) throw ConfigError("beam_search: beam_size must be >= 1");
  std::vector<BeamHypothesis> alive{BeamHypothesis{}};
  std::vector<BeamHypothesis> done;

  for (std::size_t step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<BeamHypothesis> cand;
    for (const auto& h : alive) {
      const auto lp = logprobs(with_bos(bos, h.tokens));
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        BeamHypothesis c{h.tokens, h.logprob + lp[tok], false};
        c.tokens.push_back(static_cast<TokenId>(tok));
        cand.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam_size - done.size(), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), ranks_before);
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      if (eos && cand[i].tokens.back() == *eos) {
        cand[i].finished = true;
        done.push_back(std::move(cand[i]));
      } else {
        alive.push_back(std::move(cand[i]));
      }
    }
  }
  for (auto& h : alive) done.push_back(std::move(h));
  std::sort(done.begin(), done.end(), ranks_before);
  if (done.size() > beam_size) done.resize(beam_size);
  return done;
}

BeamHypothesis greedy_decode(const LogProbFn& logprobs, std::size_t max_len, TokenId bos,
                             std::optional<TokenId> eos) {
  BeamHypothesis h;
  for (std::size_t step = 0; step < max_len; ++step) {
    const auto lp = logprobs(with_bos(bos, h.tokens));
    const auto best = std::max_element(lp.begin(), lp.end());
    const auto tok = static_cast<TokenId>(best - lp.begin());
    h.tokens.push_back(tok);
    h.logprob += *best;
    if (eos && tok == *eos) {
      h.finished = true;
      break;
    }
  }
  return h;
}

LogProbFn model_logprobs(const Model& model, const EncoderOutput* enc, const DecoderOptions& options) {
  return [&model, enc, options](std::span<const TokenId> prefix) {
    return next_token_logprobs(model, prefix, enc, options);
  };
}

std::vector<BeamHypothesis> beam_search(const Model& model, const EncoderOutput& enc, std::size_t beam_size,
                                        std::size_t max_len) {
  const std::size_t cap = model.config.max_seq_len - 1;
  return beam_search(model_logprobs(model, &enc), beam_size, std::min(max_len, cap));
}

}  // namespace vgpt
