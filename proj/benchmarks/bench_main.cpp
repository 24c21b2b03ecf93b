// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "visualgpt/attention.hpp"
#include "visualgpt/bpe.hpp"
#include "visualgpt/dataset.hpp"
#include "visualgpt/metrics.hpp"
#include "visualgpt/model.hpp"
#include "visualgpt/ops.hpp"
#include "visualgpt/training.hpp"

namespace vgpt {
namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, bool grad = false) {
  std::normal_distribution<double> d(0.0, 0.1);
  std::vector<double> v(r * c);
  for (auto& x : v) x = d(rng);
  return Tensor({r, c}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  NoGradScope ng;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_CausalSelfAttention(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const AttentionConfig cfg{64, 4};
  const AttentionWeights w{random_matrix(64, 64, rng), random_matrix(64, 64, rng), random_matrix(64, 64, rng),
                           random_matrix(64, 64, rng)};
  const Tensor h = random_matrix(t, 64, rng);
  NoGradScope ng;
  for (auto _ : state) benchmark::DoNotOptimize(causal_self_attention(h, w, cfg));
}
BENCHMARK(BM_CausalSelfAttention)->Arg(8)->Arg(32);

struct DeskModel {
  Model model;
  Tensor features;
  std::vector<TokenId> ids;
};

DeskModel desk_model(std::size_t len) {
  ModelConfig cfg = ModelConfig::desk_preset();
  cfg.vocab_size = 400;
  DeskModel d{make_model(cfg, ModelMode::kCaptioner, 3), {}, {}};
  std::mt19937_64 rng(3);
  d.features = random_matrix(3, cfg.feature_dim, rng);
  std::uniform_int_distribution<TokenId> tok(3, 399);
  d.ids.push_back(BpeModel::kBos);
  while (d.ids.size() < len) d.ids.push_back(tok(rng));
  return d;
}

void BM_DeskForward(benchmark::State& state) {
  auto d = desk_model(static_cast<std::size_t>(state.range(0)));
  d.model.params.set_requires_grad(false);
  for (auto _ : state) {
    const auto enc = encoder_forward(d.features, d.model);
    benchmark::DoNotOptimize(decoder_forward(d.ids, &enc, d.model));
  }
}
BENCHMARK(BM_DeskForward)->Arg(12)->Arg(32);

void BM_DeskXeBackward(benchmark::State& state) {
  auto d = desk_model(12);
  d.model.params.set_requires_grad(true);
  const std::vector<TokenId> target(d.ids.begin() + 1, d.ids.end());
  for (auto _ : state) {
    d.model.params.zero_grad();
    Tape tape;
    TapeScope scope(tape);
    const auto enc = encoder_forward(d.features, d.model);
    tape.backward(xe_loss(d.model, &enc, target));
  }
}
BENCHMARK(BM_DeskXeBackward);

void BM_BpeEncode(benchmark::State& state) {
  const auto corpus = gen_text_corpus(2000, 4);
  const BpeModel bpe = bpe_train(corpus, 300);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bpe.encode(corpus[i++ % corpus.size()]));
}
BENCHMARK(BM_BpeEncode);

void BM_CiderD(benchmark::State& state) {
  ShapeWorldOptions o;
  o.n_examples = static_cast<std::size_t>(state.range(0));
  const auto data = gen_shapeworld(o);
  const auto refs = reference_words(data);
  std::vector<Words> cands;
  for (std::size_t i = 0; i < data.size(); ++i) cands.push_back(tokenize_caption(data[(i + 1) % data.size()].refs[0]));
  for (auto _ : state) benchmark::DoNotOptimize(cider_d(cands, refs));
}
BENCHMARK(BM_CiderD)->Arg(200);

}  // namespace
}  // namespace vgpt

BENCHMARK_MAIN();
