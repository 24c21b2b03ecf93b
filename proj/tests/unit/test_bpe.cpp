// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support/test_util.hpp"
#include "visualgpt/bpe.hpp"
#include "visualgpt/dataset.hpp"
#include "visualgpt/error.hpp"

namespace vgpt {
namespace {

using Merges = std::vector<std::pair<std::string, std::string>>;

TEST(BpeTrain, SingleMostFrequentPair) {
  const std::vector<std::string> corpus{"abab"};
  EXPECT_EQ(bpe_train(corpus, 1).merges(), (Merges{{"a", "b"}}));
}

TEST(BpeTrain, ZeroMerges) {
  const std::vector<std::string> corpus{"aa"};
  const auto m = bpe_train(corpus, 0);
  EXPECT_TRUE(m.merges().empty());
  EXPECT_EQ(m.base_vocab(), (std::vector<std::string>{"a"}));
  EXPECT_EQ(m.vocab_size(), 4u);
}

TEST(BpeTrain, HandTracedSecondMerge) {
  const std::vector<std::string> corpus{"abab"};
  const auto m = bpe_train(corpus, 2);
  EXPECT_EQ(m.merges(), (Merges{{"a", "b"}, {"ab", "ab"}}));
  EXPECT_EQ(m.encode("abab"), (std::vector<TokenId>{BpeModel::kBos, m.id("abab"), BpeModel::kEos}));
}

TEST(BpeTrain, TiesBreakLexicographically) {
  // every adjacent pair occurs once; the space sorts first
  const std::vector<std::string> corpus{"cd ab"};
  const auto m = bpe_train(corpus, 1);
  ASSERT_EQ(m.merges().size(), 1u);
  EXPECT_EQ(m.merges()[0], (std::pair<std::string, std::string>{" ", "a"}));
}

TEST(BpeTrain, EmptyCorpusIsAConfigError) {
  const std::vector<std::string> corpus;
  EXPECT_THROW(bpe_train(corpus, 3), ConfigError);
}

TEST(BpeTrain, MergesNeverCrossWords) {
  const std::vector<std::string> corpus{"a a a a a a"};
  const auto m = bpe_train(corpus, 10);
  for (const auto& [l, r] : m.merges()) {
    const std::string joined = l + r;
    EXPECT_EQ(joined.find(' ', 1), std::string::npos) << joined;
  }
}

TEST(BpeTrain, DeterministicSerialization) {
  const auto corpus = gen_text_corpus(300, 7);
  EXPECT_EQ(bpe_train(corpus, 60).to_json(), bpe_train(corpus, 60).to_json());
}

TEST(BpeEncode, EmptyText) {
  const std::vector<std::string> corpus{"ab"};
  const auto m = bpe_train(corpus, 1);
  EXPECT_EQ(m.encode(""), (std::vector<TokenId>{BpeModel::kBos, BpeModel::kEos}));
  EXPECT_EQ(m.decode(std::vector<TokenId>{BpeModel::kBos, BpeModel::kEos}), "");
}

TEST(BpeEncode, UnknownSymbolNamesSymbolAndOffset) {
  const std::vector<std::string> corpus{"ab"};
  const auto m = bpe_train(corpus, 0);
  try {
    m.encode("abz");
    FAIL() << "expected TokenizationError";
  } catch (const TokenizationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'z'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("offset 2"), std::string::npos) << msg;
  }
}

TEST(BpeDecode, StripsSpecials) {
  const std::vector<std::string> corpus{"ab"};
  const auto m = bpe_train(corpus, 0);
  EXPECT_EQ(m.decode(std::vector<TokenId>{BpeModel::kBos, m.id("a"), m.id("b"), BpeModel::kEos}), "ab");
  EXPECT_THROW(m.decode(std::vector<TokenId>{99}), LookupError);
}

TEST(Bpe, RoundTripOnGeneratedCaptions) {
  const auto corpus = gen_text_corpus(2000, 11);
  const auto m = bpe_train(corpus, 120);
  const auto captions = gen_text_corpus(1000, 12);
  for (const auto& c : captions) {
    const auto ids = m.encode(c);
    for (TokenId id : ids) EXPECT_LT(static_cast<std::size_t>(id), m.vocab_size());
    ASSERT_EQ(m.decode(ids), c);
  }
}

TEST(Bpe, IdsAreABijectionAndSpecialsAreReserved) {
  const auto corpus = gen_text_corpus(500, 13);
  const auto m = bpe_train(corpus, 80);
  for (TokenId id = 0; id < 3; ++id) EXPECT_TRUE(BpeModel::is_special(id));
  for (std::size_t id = 3; id < m.vocab_size(); ++id) {
    EXPECT_FALSE(BpeModel::is_special(static_cast<TokenId>(id)));
    EXPECT_EQ(m.id(m.token(static_cast<TokenId>(id))), static_cast<TokenId>(id));
  }
}

TEST(Bpe, JsonRoundTrip) {
  testing::TempDir dir("bpe");
  const auto corpus = gen_text_corpus(200, 14);
  const auto m = bpe_train(corpus, 40);
  save_bpe(dir.file("tok.json"), m);
  const auto back = load_bpe(dir.file("tok.json"));
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(back.encode(corpus[0]), m.encode(corpus[0]));
}

}  // namespace
}  // namespace vgpt
