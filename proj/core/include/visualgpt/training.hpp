// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "visualgpt/bpe.hpp"
#include "visualgpt/dataset.hpp"
#include "visualgpt/decode.hpp"
#include "visualgpt/metrics.hpp"
#include "visualgpt/model.hpp"
#include "visualgpt/optim.hpp"

namespace vgpt {

struct TrainConfig {
  double lr_xe = 1e-4;
  double lr_rl = 1e-5;
  std::size_t batch_size = 25;
  std::size_t beam_size = 5;
  std::size_t scst_samples = 5;  // L
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 1;
  std::uint64_t seed = 42;
  std::size_t max_len = 24;       ///< generated tokens per caption, EOS included
  double clip_norm = 1.0;         ///< global gradient norm cap in the RL phase
  bool stochastic_scst = false;   ///< sample SCST sentences instead of taking beams
  bool greedy_eval = false;       ///< validation decoding with argmax instead of beams

  void validate() const;
  AdamHyper adam() const { return {beta1, beta2, eps, weight_decay}; }
  bool operator==(const TrainConfig&) const = default;
};

enum class Phase { kXe, kRl, kLm };
std::string to_string(Phase p);

/// Negative log-likelihood of `targets` (w_1..w_T, EOS included) under
/// teacher forcing with BOS prepended. `enc` null means language-model mode.
Tensor xe_loss(const Model& model, const EncoderOutput* enc, std::span<const TokenId> targets,
               const DecoderOptions& options = {});

/// log p(tokens | image); the negation of xe_loss.
Tensor sequence_logprob(const Model& model, const EncoderOutput* enc, std::span<const TokenId> tokens);

/// Mean-baseline advantages with an exact zero sum. Rewards are quantized to
/// q_i = round(r_i * 2^32); numerator d_i = L*q_i - sum(q) sums to zero in
/// integer arithmetic and advantage_i = d_i / (L * 2^32).
struct ScstAdvantages {
  std::vector<double> rewards;  ///< quantized rewards q_i / 2^32
  double baseline = 0.0;
  std::vector<std::int64_t> numerators;
  std::vector<double> advantages;
};
ScstAdvantages scst_advantages(std::span<const double> rewards);

/// -(1/L) * sum_i advantage_i * logp_i, formed from the integer numerators.
/// Zero-advantage samples contribute nothing; if every advantage is zero
/// the result is a constant and backward is a no-op.
Tensor policy_gradient_loss(std::span<const Tensor> sample_logprobs, const ScstAdvantages& adv);

struct ScstReport {
  std::vector<std::vector<TokenId>> samples;
  ScstAdvantages adv;
  bool padded = false;  ///< fewer than L finished beams; padded with unfinished ones
  double grad_norm = 0.0;
};

/// Picks L sentences (the L best finished beams, or L ancestral samples
/// when cfg.stochastic_scst), scores them with CIDEr-D against the
/// references and adds the policy gradient to the parameter gradients.
ScstReport scst_accumulate(Model& model, const CaptionExample& example, const BpeModel& bpe, const CiderD& cider,
                           const TrainConfig& cfg, std::mt19937_64& rng);

/// scst_accumulate on zeroed gradients, clipping, then one optimizer step.
ScstReport scst_step(Model& model, AdamW& optimizer, const CaptionExample& example, const BpeModel& bpe,
                     const CiderD& cider, const TrainConfig& cfg, std::mt19937_64& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  Phase phase = Phase::kXe;
  std::optional<double> loss;
  std::optional<double> mean_reward;
  std::optional<double> val_cider;
  double wall_ms = 0.0;
};

/// One JSON object per line. Timing is wall-clock and therefore the only
/// field that differs between identical runs; `with_timing = false` drops it.
std::string history_to_jsonl(const std::vector<EpochRecord>& history, bool with_timing = true);

struct TrainOutputs {
  std::string checkpoint_dir;  ///< per-epoch checkpoints when set
  std::string history_path;    ///< JSONL history rewritten after every epoch when set
  bool verbose = false;
};

/// Caption training. XE iterates over every (example, reference) pair;
/// RL runs one SCST step per example. Shuffling is seeded from cfg.seed and
/// the epoch index. Validation CIDEr-D is recorded when `val` is nonempty.
std::vector<EpochRecord> train_loop(const std::vector<CaptionExample>& train, const std::vector<CaptionExample>& val,
                                    Model& model, const BpeModel& bpe, const TrainConfig& cfg, Phase phase,
                                    const TrainOutputs& outputs = {});

/// Language-model pretraining on plain sentences (XE without an image).
std::vector<EpochRecord> pretrain_lm(const std::vector<std::string>& corpus, Model& lm, const BpeModel& bpe,
                                     const TrainConfig& cfg, const TrainOutputs& outputs = {});

/// Decodes one caption per example (beam search, or greedy if beam_size is 1).
std::vector<std::string> generate_captions(const Model& model, const BpeModel& bpe,
                                           const std::vector<CaptionExample>& examples, std::size_t beam_size,
                                           std::size_t max_len);

struct EvalReport {
  std::vector<std::string> candidates;
  BleuResult bleu;
  CiderResult cider;
};

/// BLEU-1..4 (corpus level) and CIDEr-D with document frequencies from the
/// evaluated references.
EvalReport score_captions(const std::vector<std::string>& candidates, const std::vector<CaptionExample>& examples);

std::vector<std::vector<Words>> reference_words(const std::vector<CaptionExample>& examples);

}  // namespace vgpt
