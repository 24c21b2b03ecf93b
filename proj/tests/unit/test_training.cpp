// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "support/test_util.hpp"
#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"
#include "visualgpt/ops.hpp"
#include "visualgpt/training.hpp"

namespace vgpt {
namespace {

constexpr TokenId kBos = BpeModel::kBos;
constexpr TokenId kEos = BpeModel::kEos;

ModelConfig small_config(std::size_t vocab) {
  ModelConfig c;
  c.encoder_layers = 1;
  c.decoder_layers = 2;
  c.hidden = 16;
  c.heads = 2;
  c.feature_dim = kShapeWorldFeatureDim;
  c.vocab_size = vocab;
  c.max_seq_len = 16;
  c.mlp_ratio = 2;
  return c;
}

struct Setup {
  std::vector<CaptionExample> train;
  std::vector<CaptionExample> val;
  BpeModel bpe;
  Model model;
};

Setup make_setup(std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
  ShapeWorldOptions o;
  o.n_examples = n_train;
  o.seed = seed;
  auto train = gen_shapeworld(o);
  std::vector<CaptionExample> val;
  if (n_val > 0) {
    o.n_examples = n_val;
    o.seed = seed + 1;
    o.id_prefix = "v";
    val = gen_shapeworld(o);
  }
  auto bpe = bpe_train(gen_text_corpus(300, seed), 200);
  auto model = make_model(small_config(bpe.vocab_size()), ModelMode::kCaptioner, seed);
  return {std::move(train), std::move(val), std::move(bpe), std::move(model)};
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.scst_samples = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lr_xe = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beam_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.scst_samples = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stochastic_scst = true;
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.lr_xe, 1e-4);
  EXPECT_EQ(c.lr_rl, 1e-5);
  EXPECT_EQ(c.batch_size, 25u);
  EXPECT_EQ(c.beam_size, 5u);
  EXPECT_EQ(c.scst_samples, 5u);
}

TEST(XeLoss, UniformModelVocabFour) {
  ModelConfig c = small_config(4);
  auto m = make_model(c, ModelMode::kLanguageModel, 0);
  for (auto& v : m.params.at("tok_emb").mutable_data()) v = 0.0;
  const std::vector<TokenId> target{3, 2, kEos};
  EXPECT_NEAR(xe_loss(m, nullptr, target).item(), 3.0 * std::log(4.0), 1e-12);
}

TEST(XeLoss, Errors) {
  const auto m = make_model(small_config(5), ModelMode::kLanguageModel, 0);
  EXPECT_THROW(xe_loss(m, nullptr, std::vector<TokenId>{}), ContractError);
  EXPECT_THROW(xe_loss(m, nullptr, std::vector<TokenId>(17, 3)), LengthError);
  EXPECT_NO_THROW(xe_loss(m, nullptr, std::vector<TokenId>(16, 3)));
}

TEST(XeLoss, ConfidentModelHasNearZeroLoss) {
  // logits = LN(x) . E^T; a huge embedding for the target makes p -> 1
  auto m = make_model(small_config(5), ModelMode::kLanguageModel, 0);
  const std::vector<TokenId> target{kEos};
  auto& bias = m.params.at("dec.ln_f.b");
  auto emb = m.params.at("tok_emb").mutable_data();
  for (std::size_t c = 0; c < 16; ++c) {
    bias.mutable_data()[c] = 1.0;
    emb[static_cast<std::size_t>(kEos) * 16 + c] = 100.0;
  }
  EXPECT_LT(xe_loss(m, nullptr, target).item(), 1e-12);
}

TEST(XeLoss, SequenceLogprobIsTheNegation) {
  const auto m = make_model(small_config(6), ModelMode::kLanguageModel, 1);
  const std::vector<TokenId> target{4, 5, kEos};
  EXPECT_EQ(sequence_logprob(m, nullptr, target).item(), -xe_loss(m, nullptr, target).item());
}

TEST(ScstAdvantages, TwoSamples) {
  const std::vector<double> r{1.0, 0.0};
  const auto a = scst_advantages(r);
  EXPECT_EQ(a.baseline, 0.5);
  EXPECT_EQ(a.advantages, (std::vector<double>{0.5, -0.5}));
}

TEST(ScstAdvantages, NumeratorsSumToZero) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0, 10);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(2 + trial % 7);
    for (auto& x : r) x = d(rng);
    const auto a = scst_advantages(r);
    EXPECT_EQ(std::accumulate(a.numerators.begin(), a.numerators.end(), std::int64_t{0}), 0);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(a.advantages[i], r[i] - a.baseline, 1e-9);
  }
}

TEST(ScstAdvantages, IdenticalRewardsGiveZeroAdvantage) {
  const std::vector<double> r(5, 0.7317);
  const auto a = scst_advantages(r);
  for (double v : a.advantages) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(scst_advantages(std::vector<double>{1.0}), ContractError);
  EXPECT_THROW(scst_advantages(std::vector<double>{1.0, NAN}), NumericError);
}

TEST(PolicyGradient, AllZeroAdvantagesIsConstant) {
  const std::vector<double> r(3, 2.0);
  Tensor x = Tensor::scalar(0.5);
  x.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  const std::vector<Tensor> logps{x, x, x};
  const Tensor loss = policy_gradient_loss(logps, scst_advantages(r));
  EXPECT_EQ(loss.item(), 0.0);
  tape.backward(loss);
  EXPECT_FALSE(x.has_grad() && x.grad()[0] != 0.0);
}

TEST(PolicyGradient, TwoParameterAscent) {
  // two one-token sentences whose log-probs are log_softmax(theta)
  Tensor theta = Tensor::matrix({{0.2, -0.1}});
  theta.set_requires_grad(true);
  Parameters ps;
  ps.set("theta", theta, Provenance::kFresh);
  auto logp = [&](int i) { return pick(log_softmax(ps.at("theta")), std::vector<int>{i}); };
  const std::vector<double> r{1.0, 0.0};
  const double before = logp(0).item();

  ps.zero_grad();
  Tape tape;
  {
    TapeScope scope(tape);
    const std::vector<Tensor> logps{logp(0), logp(1)};
    tape.backward(policy_gradient_loss(logps, scst_advantages(r)));
  }
  // d loss / d theta_0 = -(1/2)(0.5 (1 - p0) - 0.5 (-p0)) = -1/4
  EXPECT_NEAR(ps.at("theta").grad()[0], -0.25, 1e-15);
  EXPECT_NEAR(ps.at("theta").grad()[1], 0.25, 1e-15);
  AdamW opt;
  opt.step(ps, 1e-3);
  EXPECT_GT(logp(0).item(), before);
}

TEST(Scst, IdenticalSamplesGiveDecayOnlyUpdate) {
  auto s = make_setup(1, 0, 5);
  // EOS dominates every step, so every sample is [EOS]
  auto& bias = s.model.params.at("dec.ln_f.b");
  auto emb = s.model.params.at("tok_emb").mutable_data();
  for (std::size_t c = 0; c < 16; ++c) {
    bias.mutable_data()[c] = 1.0;
    emb[static_cast<std::size_t>(kEos) * 16 + c] = 200.0;
  }
  s.model.params.set_requires_grad(true);
  const Parameters before = s.model.params.clone();

  TrainConfig cfg;
  cfg.stochastic_scst = true;
  cfg.scst_samples = 4;
  cfg.weight_decay = 0.05;
  cfg.lr_rl = 0.01;
  const CiderD cider(reference_words(s.train));
  AdamW opt(cfg.adam());
  std::mt19937_64 rng(1);
  const auto rep = scst_step(s.model, opt, s.train[0], s.bpe, cider, cfg, rng);
  for (const auto& sample : rep.samples) EXPECT_EQ(sample, (std::vector<TokenId>{kEos}));
  for (double a : rep.adv.advantages) EXPECT_EQ(a, 0.0);
  EXPECT_EQ(rep.grad_norm, 0.0);
  for (const auto& [name, t] : before.tensors()) {
    const auto now = s.model.params.at(name).data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double p = t.data()[i];
      ASSERT_EQ(now[i], p - cfg.lr_rl * cfg.weight_decay * p) << name << "[" << i << "]";
    }
  }
}

TEST(Scst, BeamSamplesArePaddedWhenBeamsDoNotFinish) {
  auto s = make_setup(1, 0, 6);
  s.model.params.set_requires_grad(true);
  TrainConfig cfg;
  cfg.beam_size = 3;
  cfg.scst_samples = 3;
  cfg.max_len = 2;
  const CiderD cider(reference_words(s.train));
  std::mt19937_64 rng(1);
  const auto rep = scst_accumulate(s.model, s.train[0], s.bpe, cider, cfg, rng);
  EXPECT_EQ(rep.samples.size(), 3u);
  EXPECT_TRUE(rep.padded);
}

TEST(TrainLoop, OneEpochOnOneExampleReducesItsLoss) {
  auto s = make_setup(1, 0, 7);
  s.model.params.set_requires_grad(true);
  auto loss_of = [&] {
    NoGradScope ng;
    const auto enc = encoder_forward(s.train[0].features(), s.model);
    double total = 0.0;
    for (const auto& r : s.train[0].refs) {
      auto ids = s.bpe.encode(r);
      ids.erase(ids.begin());
      total += xe_loss(s.model, &enc, ids).item();
    }
    return total;
  };
  const double before = loss_of();
  TrainConfig cfg;
  const auto h = train_loop(s.train, {}, s.model, s.bpe, cfg, Phase::kXe);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_LT(loss_of(), before);
  EXPECT_FALSE(h[0].val_cider.has_value());
  EXPECT_TRUE(h[0].loss.has_value());
}

TEST(TrainLoop, FixedSeedHistoriesAreIdentical) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr_xe = 1e-3;
  cfg.batch_size = 4;
  cfg.greedy_eval = true;
  cfg.max_len = 12;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    auto s = make_setup(6, 3, 8);
    s.model.params.set_requires_grad(true);
    const auto text = history_to_jsonl(train_loop(s.train, s.val, s.model, s.bpe, cfg, Phase::kXe), false);
    if (run == 0) first = text;
    else EXPECT_EQ(text, first);
  }
  EXPECT_NE(first.find("\"val_cider\""), std::string::npos);
  EXPECT_EQ(first.find("wall_ms"), std::string::npos);
}

TEST(TrainLoop, RlPhaseRecordsMeanReward) {
  auto s = make_setup(2, 0, 9);
  s.model.params.set_requires_grad(true);
  TrainConfig cfg;
  cfg.beam_size = 2;
  cfg.scst_samples = 2;
  cfg.max_len = 6;
  const auto h = train_loop(s.train, {}, s.model, s.bpe, cfg, Phase::kRl);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_TRUE(h[0].mean_reward.has_value());
  EXPECT_EQ(h[0].phase, Phase::kRl);
}

TEST(TrainLoop, WritesHistoryAndCheckpoints) {
  testing::TempDir dir("train");
  auto s = make_setup(2, 0, 10);
  s.model.params.set_requires_grad(true);
  TrainConfig cfg;
  cfg.epochs = 2;
  TrainOutputs out{dir.path().string(), dir.file("history.jsonl"), false};
  const auto h = train_loop(s.train, {}, s.model, s.bpe, cfg, Phase::kXe, out);
  EXPECT_EQ(read_text_file(out.history_path), history_to_jsonl(h));
  EXPECT_TRUE(std::filesystem::exists(dir.file("epoch-1.json")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("epoch-2.json")));
}

TEST(TrainLoop, EmptyTrainingSetIsRejected) {
  auto s = make_setup(1, 0, 11);
  EXPECT_THROW(train_loop({}, {}, s.model, s.bpe, TrainConfig{}, Phase::kXe), ContractError);
}

TEST(PretrainLm, LossDecreases) {
  auto corpus = gen_text_corpus(40, 12);
  auto bpe = bpe_train(corpus, 100);
  auto lm = make_model(small_config(bpe.vocab_size()), ModelMode::kLanguageModel, 12);
  lm.params.set_requires_grad(true);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr_xe = 3e-3;
  cfg.batch_size = 8;
  const auto h = pretrain_lm(corpus, lm, bpe, cfg);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(h[0].phase, Phase::kLm);
  EXPECT_LT(*h[2].loss, *h[0].loss);
}

TEST(History, JsonLines) {
  std::vector<EpochRecord> h{{1, Phase::kXe, 2.5, std::nullopt, 0.25, 12.0},
                             {2, Phase::kRl, std::nullopt, 0.75, std::nullopt, 3.0}};
  EXPECT_EQ(history_to_jsonl(h),
            "{\"epoch\":1,\"phase\":\"xe\",\"loss\":2.5,\"val_cider\":0.25,\"wall_ms\":12.0}\n"
            "{\"epoch\":2,\"phase\":\"rl\",\"mean_reward\":0.75,\"wall_ms\":3.0}\n");
  EXPECT_EQ(history_to_jsonl(h, false),
            "{\"epoch\":1,\"phase\":\"xe\",\"loss\":2.5,\"val_cider\":0.25}\n"
            "{\"epoch\":2,\"phase\":\"rl\",\"mean_reward\":0.75}\n");
}

TEST(ScoreCaptions, PerfectCandidates) {
  ShapeWorldOptions o;
  o.n_examples = 4;
  const auto ex = gen_shapeworld(o);
  std::vector<std::string> cands;
  for (const auto& e : ex) cands.push_back(e.refs[0]);
  const auto rep = score_captions(cands, ex);
  EXPECT_NEAR(rep.bleu.scores[3], 1.0, 1e-12);
  EXPECT_GT(rep.cider.mean, 0.0);
  EXPECT_THROW(score_captions({}, ex), ContractError);
}

}  // namespace
}  // namespace vgpt
