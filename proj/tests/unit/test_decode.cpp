// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "support/test_util.hpp"
#include "visualgpt/decode.hpp"
#include "visualgpt/error.hpp"

namespace vgpt {
namespace {

constexpr TokenId kBos = BpeModel::kBos;
constexpr TokenId kEos = BpeModel::kEos;

// Log-probabilities that depend on the whole prefix, drawn once per prefix.
class TableModel {
 public:
  TableModel(std::size_t vocab, std::uint64_t seed) : vocab_(vocab), rng_(seed) {}

  std::vector<double> operator()(std::span<const TokenId> prefix) {
    const std::vector<TokenId> key(prefix.begin(), prefix.end());
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
    std::uniform_real_distribution<double> d(-3, 3);
    std::vector<double> logits(vocab_);
    for (auto& l : logits) l = d(rng_);
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    for (auto& l : logits) l -= std::log(z);
    return table_[key] = logits;
  }

 private:
  std::size_t vocab_;
  std::mt19937_64 rng_;
  std::map<std::vector<TokenId>, std::vector<double>> table_;
};

bool ranks_before(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

// Every sequence of at most max_len tokens that stops at the first eos.
void enumerate(const LogProbFn& fn, std::vector<TokenId> tokens, double lp, std::size_t vocab, std::size_t max_len,
               std::optional<TokenId> eos, std::vector<BeamHypothesis>& out) {
  const bool ended = eos && !tokens.empty() && tokens.back() == *eos;
  if (ended || tokens.size() == max_len) {
    out.push_back({tokens, lp, ended});
    return;
  }
  std::vector<TokenId> prefix{kBos};
  prefix.insert(prefix.end(), tokens.begin(), tokens.end());
  const auto step = fn(prefix);
  for (std::size_t v = 0; v < vocab; ++v) {
    auto next = tokens;
    next.push_back(static_cast<TokenId>(v));
    enumerate(fn, next, lp + step[v], vocab, max_len, eos, out);
  }
}

void expect_same(const std::vector<BeamHypothesis>& got, const std::vector<BeamHypothesis>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].tokens, want[i].tokens) << i;
    EXPECT_EQ(got[i].logprob, want[i].logprob) << i;
    EXPECT_EQ(got[i].finished, want[i].finished) << i;
  }
}

TEST(BeamSearch, VocabThreeLengthTwoMatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TableModel table(3, seed);
    const LogProbFn fn = std::ref(table);
    std::vector<BeamHypothesis> all;
    enumerate(fn, {}, 0.0, 3, 2, std::nullopt, all);
    ASSERT_EQ(all.size(), 9u);
    std::sort(all.begin(), all.end(), ranks_before);
    expect_same(beam_search(fn, 9, 2, kBos, std::nullopt), all);
  }
}

TEST(BeamSearch, WideBeamWithEosMatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TableModel table(3, 100 + seed);
    const LogProbFn fn = std::ref(table);
    // token 1 plays EOS: sequences 1, 01, 21 end early
    std::vector<BeamHypothesis> all;
    enumerate(fn, {}, 0.0, 3, 2, TokenId{1}, all);
    ASSERT_EQ(all.size(), 7u);
    std::sort(all.begin(), all.end(), ranks_before);
    expect_same(beam_search(fn, 9, 2, kBos, TokenId{1}), all);
  }
}

TEST(BeamSearch, TopHypothesisIsTheBestSequence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TableModel table(4, 200 + seed);
    const LogProbFn fn = std::ref(table);
    std::vector<BeamHypothesis> all;
    enumerate(fn, {}, 0.0, 4, 3, std::nullopt, all);
    const auto best = *std::min_element(all.begin(), all.end(), ranks_before);
    EXPECT_EQ(beam_search(fn, 64, 3, kBos, std::nullopt).front().tokens, best.tokens);
  }
}

TEST(BeamSearch, BeamOneIsGreedy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TableModel table(5, 300 + seed);
    const LogProbFn fn = std::ref(table);
    const auto beam = beam_search(fn, 1, 6, kBos, TokenId{1});
    const auto greedy = greedy_decode(fn, 6, kBos, TokenId{1});
    ASSERT_EQ(beam.size(), 1u);
    EXPECT_EQ(beam[0].tokens, greedy.tokens);
    EXPECT_EQ(beam[0].logprob, greedy.logprob);
    EXPECT_EQ(beam[0].finished, greedy.finished);
  }
}

// Wider beams need not score higher, so only feasibility and the optimum
// bound are checked for narrow beams.
TEST(BeamSearch, NarrowBeamsReturnScoredSequencesBelowTheOptimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TableModel table(4, 400 + seed);
    const LogProbFn fn = std::ref(table);
    std::vector<BeamHypothesis> all;
    enumerate(fn, {}, 0.0, 4, 4, std::nullopt, all);
    const double optimum = std::min_element(all.begin(), all.end(), ranks_before)->logprob;
    for (std::size_t b = 1; b <= 6; ++b) {
      const auto top = beam_search(fn, b, 4, kBos, std::nullopt).front();
      ASSERT_EQ(top.tokens.size(), 4u);
      const auto same = std::find_if(all.begin(), all.end(), [&](const auto& h) { return h.tokens == top.tokens; });
      ASSERT_NE(same, all.end());
      EXPECT_EQ(top.logprob, same->logprob) << "beam " << b;
      EXPECT_LE(top.logprob, optimum) << "beam " << b;
    }
  }
}

TEST(BeamSearch, TiesBreakByTokenOrder) {
  const LogProbFn flat = [](std::span<const TokenId>) { return std::vector<double>(3, std::log(1.0 / 3.0)); };
  const auto out = beam_search(flat, 3, 2, kBos, std::nullopt);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].tokens, (std::vector<TokenId>{0, 0}));
  EXPECT_EQ(out[1].tokens, (std::vector<TokenId>{0, 1}));
  EXPECT_EQ(out[2].tokens, (std::vector<TokenId>{0, 2}));
  EXPECT_EQ(greedy_decode(flat, 2, kBos, std::nullopt).tokens, (std::vector<TokenId>{0, 0}));
}

TEST(BeamSearch, Deterministic) {
  TableModel table(6, 7);
  const LogProbFn fn = std::ref(table);
  const auto a = beam_search(fn, 4, 5);
  const auto b = beam_search(fn, 4, 5);
  expect_same(a, b);
}

TEST(BeamSearch, ZeroBeamIsAConfigError) {
  TableModel table(3, 1);
  EXPECT_THROW(beam_search(LogProbFn(std::ref(table)), 0, 2), ConfigError);
}

TEST(BeamSearch, ModelSearchStaysWithinPositions) {
  ModelConfig c;
  c.hidden = 8;
  c.heads = 2;
  c.decoder_layers = 1;
  c.encoder_layers = 1;
  c.feature_dim = 3;
  c.vocab_size = 6;
  c.max_seq_len = 4;
  const auto m = make_model(c, ModelMode::kCaptioner, 1);
  std::mt19937_64 rng(1);
  const auto enc = encoder_forward(testing::random_tensor({2, 3}, rng), m);
  for (const auto& h : beam_search(m, enc, 3, 50)) EXPECT_LE(h.tokens.size(), 3u);
}

}  // namespace
}  // namespace vgpt
