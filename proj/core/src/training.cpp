// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "visualgpt/checkpoint.hpp"
#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"
#include "visualgpt/ops.hpp"

namespace vgpt {

namespace {

constexpr double kRewardScale = 4294967296.0;  // 2^32

std::vector<TokenId> caption_targets(const BpeModel& bpe, const std::string& text) {
  auto ids = bpe.encode(text);
  ids.erase(ids.begin());  // BOS is supplied by the decoder input
  return ids;
}

std::string caption_text(const BpeModel& bpe, std::span<const TokenId> tokens) {
  std::string s = bpe.decode(tokens);
  const auto b = s.find_first_not_of(' ');
  return b == std::string::npos ? std::string{} : s.substr(b);
}

std::vector<TokenId> sample_sentence(const Model& model, const EncoderOutput& enc, std::size_t max_len,
                                     std::mt19937_64& rng) {
  std::vector<TokenId> prefix{BpeModel::kBos};
  for (std::size_t step = 0; step < max_len; ++step) {
    const auto lp = next_token_logprobs(model, prefix, &enc);
    std::vector<double> p(lp.size());
    std::transform(lp.begin(), lp.end(), p.begin(), [](double v) { return std::exp(v); });
    std::discrete_distribution<int> dist(p.begin(), p.end());
    const TokenId tok = dist(rng);
    prefix.push_back(tok);
    if (tok == BpeModel::kEos) break;
  }
  return {prefix.begin() + 1, prefix.end()};
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  return seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL * (epoch + 1);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void write_outputs(const TrainOutputs& out, const std::vector<EpochRecord>& history, const Model& model,
                   const TrainConfig& cfg) {
  if (!out.history_path.empty()) write_text_atomic(out.history_path, history_to_jsonl(history));
  if (!out.checkpoint_dir.empty()) {
    const auto epoch = history.back().epoch;
    const auto path = std::filesystem::path(out.checkpoint_dir) / ("epoch-" + std::to_string(epoch) + ".json");
    save_checkpoint(path.string(), make_checkpoint(model, cfg.seed, epoch, out.history_path));
  }
}

void report(const TrainOutputs& out, const EpochRecord& r) {
  if (!out.verbose) return;
  std::cerr << to_string(r.phase) << " epoch " << r.epoch;
  if (r.loss) std::cerr << " loss " << *r.loss;
  if (r.mean_reward) std::cerr << " reward " << *r.mean_reward;
  if (r.val_cider) std::cerr << " val_cider " << *r.val_cider;
  std::cerr << " (" << static_cast<long>(r.wall_ms) << " ms)\n";
}

// One pass of teacher-forced training over `n` samples; `loss_of(i)` builds
// the loss of sample i on the active tape. Returns the mean sample loss.
template <typename LossOf>
double xe_epoch(std::size_t n, Model& model, AdamW& opt, const TrainConfig& cfg, std::size_t epoch, LossOf loss_of) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t end = std::min(n, start + cfg.batch_size);
    const double scale = 1.0 / static_cast<double>(end - start);
    model.params.zero_grad();
    for (std::size_t b = start; b < end; ++b) {
      Tape tape;
      TapeScope scope(tape);
      const Tensor loss = loss_of(order[b]);
      total += loss.item();
      tape.backward(affine(loss, scale));
    }
    opt.step(model.params, cfg.lr_xe);
  }
  return total / static_cast<double>(n);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_xe > 0.0) || !(lr_rl > 0.0)) throw ConfigError("train: learning rates must be > 0");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (beam_size == 0) throw ConfigError("train: beam_size must be >= 1");
  if (scst_samples < 2) throw ConfigError("train: scst_samples (L) must be >= 2");
  if (!stochastic_scst && scst_samples > beam_size) {
    throw ConfigError("train: scst_samples (L) cannot exceed beam_size when taking beams");
  }
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train: eps must be > 0");
  if (max_len == 0) throw ConfigError("train: max_len must be >= 1");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be > 0");
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kXe:
      return "xe";
    case Phase::kRl:
      return "rl";
    case Phase::kLm:
      return "lm";
  }
  return "unknown";
}

Tensor xe_loss(const Model& model, const EncoderOutput* enc, std::span<const TokenId> targets,
               const DecoderOptions& options) {
  if (targets.empty()) throw ContractError("xe_loss: empty target sequence");
  if (targets.size() > model.config.max_seq_len) {
    throw LengthError("xe_loss: target of " + std::to_string(targets.size()) + " tokens exceeds max_seq_len " +
                      std::to_string(model.config.max_seq_len));
  }
  std::vector<TokenId> input{BpeModel::kBos};
  input.insert(input.end(), targets.begin(), targets.end() - 1);
  const Tensor logits = decoder_forward(input, enc, model, options);
  return affine(sum(pick(log_softmax(logits), targets)), -1.0);
}

Tensor sequence_logprob(const Model& model, const EncoderOutput* enc, std::span<const TokenId> tokens) {
  return affine(xe_loss(model, enc, tokens), -1.0);
}

ScstAdvantages scst_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ContractError("scst: need at least 2 samples for a mean baseline");
  ScstAdvantages a;
  const auto L = static_cast<std::int64_t>(rewards.size());
  std::vector<std::int64_t> q(rewards.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (!std::isfinite(rewards[i])) throw NumericError("scst: non-finite reward");
    q[i] = std::llround(rewards[i] * kRewardScale);
    total += q[i];
    a.rewards.push_back(static_cast<double>(q[i]) / kRewardScale);
  }
  a.baseline = static_cast<double>(total) / (static_cast<double>(L) * kRewardScale);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    a.numerators.push_back(L * q[i] - total);
    a.advantages.push_back(static_cast<double>(a.numerators.back()) / (static_cast<double>(L) * kRewardScale));
  }
  return a;
}

Tensor policy_gradient_loss(std::span<const Tensor> sample_logprobs, const ScstAdvantages& adv) {
  if (sample_logprobs.size() != adv.numerators.size()) {
    throw DimensionError("policy_gradient_loss: " + std::to_string(sample_logprobs.size()) + " samples for " +
                         std::to_string(adv.numerators.size()) + " advantages");
  }
  const double L = static_cast<double>(adv.numerators.size());
  const double scale = -1.0 / (L * L * kRewardScale);
  std::vector<Tensor> terms;
  for (std::size_t i = 0; i < sample_logprobs.size(); ++i) {
    if (adv.numerators[i] == 0) continue;
    terms.push_back(affine(sample_logprobs[i], static_cast<double>(adv.numerators[i]) * scale));
  }
  if (terms.empty()) return Tensor::scalar(0.0);
  Tensor loss = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) loss = add(loss, terms[i]);
  return loss;
}

ScstReport scst_accumulate(Model& model, const CaptionExample& example, const BpeModel& bpe, const CiderD& cider,
                           const TrainConfig& cfg, std::mt19937_64& rng) {
  const std::size_t L = cfg.scst_samples;
  if (L < 2) throw ContractError("scst: L must be >= 2");
  const Tensor features = example.features();
  const std::size_t max_len = std::min(cfg.max_len, model.config.max_seq_len);

  ScstReport rep;
  {
    NoGradScope no_grad;
    const EncoderOutput enc = encoder_forward(features, model);
    if (cfg.stochastic_scst) {
      for (std::size_t i = 0; i < L; ++i) rep.samples.push_back(sample_sentence(model, enc, max_len, rng));
    } else {
      const auto beams = beam_search(model, enc, cfg.beam_size, max_len);
      for (const auto& h : beams) {
        if (h.finished && rep.samples.size() < L) rep.samples.push_back(h.tokens);
      }
      for (const auto& h : beams) {
        if (!h.finished && rep.samples.size() < L) {
          rep.samples.push_back(h.tokens);
          rep.padded = true;
        }
      }
      if (rep.padded) {
        std::cerr << "warning: scst: fewer than " << L << " finished beams for '" << example.id
                  << "'; padded with unfinished hypotheses\n";
      }
      if (rep.samples.size() < L) throw ContractError("scst: beam search returned fewer than L hypotheses");
    }
  }

  std::vector<Words> refs;
  for (const auto& r : example.refs) refs.push_back(tokenize_caption(r));
  std::vector<double> rewards;
  for (const auto& s : rep.samples) rewards.push_back(cider.score(tokenize_caption(caption_text(bpe, s)), refs));
  rep.adv = scst_advantages(rewards);

  Tape tape;
  TapeScope scope(tape);
  const EncoderOutput enc = encoder_forward(features, model);
  std::vector<Tensor> logps;
  for (std::size_t i = 0; i < L; ++i) {
    if (rep.adv.numerators[i] == 0) {
      logps.push_back(Tensor::scalar(0.0));
      continue;
    }
    logps.push_back(sequence_logprob(model, &enc, rep.samples[i]));
  }
  tape.backward(policy_gradient_loss(logps, rep.adv));
  return rep;
}

ScstReport scst_step(Model& model, AdamW& optimizer, const CaptionExample& example, const BpeModel& bpe,
                     const CiderD& cider, const TrainConfig& cfg, std::mt19937_64& rng) {
  model.params.zero_grad();
  ScstReport rep = scst_accumulate(model, example, bpe, cider, cfg, rng);
  rep.grad_norm = clip_grad_norm(model.params, cfg.clip_norm);
  optimizer.step(model.params, cfg.lr_rl);
  return rep;
}

std::string history_to_jsonl(const std::vector<EpochRecord>& history, bool with_timing) {
  std::string out;
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["phase"] = to_string(r.phase);
    if (r.loss) j["loss"] = *r.loss;
    if (r.mean_reward) j["mean_reward"] = *r.mean_reward;
    if (r.val_cider) j["val_cider"] = *r.val_cider;
    if (with_timing) j["wall_ms"] = r.wall_ms;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::vector<Words>> reference_words(const std::vector<CaptionExample>& examples) {
  std::vector<std::vector<Words>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    std::vector<Words> refs;
    for (const auto& r : ex.refs) refs.push_back(tokenize_caption(r));
    out.push_back(std::move(refs));
  }
  return out;
}

std::vector<std::string> generate_captions(const Model& model, const BpeModel& bpe,
                                           const std::vector<CaptionExample>& examples, std::size_t beam_size,
                                           std::size_t max_len) {
  std::vector<std::string> out;
  out.reserve(examples.size());
  NoGradScope no_grad;
  const std::size_t cap = std::min(max_len, model.config.max_seq_len - 1);
  for (const auto& ex : examples) {
    const EncoderOutput enc = encoder_forward(ex.features(), model);
    std::vector<TokenId> tokens;
    if (beam_size <= 1) {
      tokens = greedy_decode(model_logprobs(model, &enc), cap).tokens;
    } else {
      tokens = beam_search(model, enc, beam_size, cap).front().tokens;
    }
    out.push_back(caption_text(bpe, tokens));
  }
  return out;
}

EvalReport score_captions(const std::vector<std::string>& candidates, const std::vector<CaptionExample>& examples) {
  if (candidates.size() != examples.size()) throw ContractError("score_captions: candidate/example count mismatch");
  EvalReport rep;
  rep.candidates = candidates;
  std::vector<Words> cands;
  for (const auto& c : candidates) cands.push_back(tokenize_caption(c));
  const auto refs = reference_words(examples);
  rep.bleu = corpus_bleu(cands, refs);
  rep.cider = cider_d(cands, refs);
  return rep;
}

std::vector<EpochRecord> train_loop(const std::vector<CaptionExample>& train, const std::vector<CaptionExample>& val,
                                    Model& model, const BpeModel& bpe, const TrainConfig& cfg, Phase phase,
                                    const TrainOutputs& outputs) {
  cfg.validate();
  if (train.empty()) throw ContractError("train_loop: empty training set");
  if (phase == Phase::kLm) throw ContractError("train_loop: use pretrain_lm for language-model training");

  // (example index, target ids) per reference
  std::vector<std::pair<std::size_t, std::vector<TokenId>>> pairs;
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (const auto& r : train[i].refs) pairs.emplace_back(i, caption_targets(bpe, r));
  }
  std::vector<Tensor> features;
  for (const auto& ex : train) features.push_back(ex.features());

  std::optional<CiderD> cider;
  if (phase == Phase::kRl) cider.emplace(reference_words(train));

  AdamW opt(cfg.adam());
  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    if (phase == Phase::kXe) {
      rec.loss = xe_epoch(pairs.size(), model, opt, cfg, epoch, [&](std::size_t i) {
        const EncoderOutput enc = encoder_forward(features[pairs[i].first], model);
        return xe_loss(model, &enc, pairs[i].second);
      });
    } else {
      std::vector<std::size_t> order(train.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
      std::shuffle(order.begin(), order.end(), rng);
      double reward = 0.0;
      for (std::size_t i : order) {
        const auto rep = scst_step(model, opt, train[i], bpe, *cider, cfg, rng);
        reward += std::accumulate(rep.adv.rewards.begin(), rep.adv.rewards.end(), 0.0) /
                  static_cast<double>(rep.adv.rewards.size());
      }
      rec.mean_reward = reward / static_cast<double>(train.size());
    }
    if (!val.empty()) {
      const auto caps = generate_captions(model, bpe, val, cfg.greedy_eval ? 1 : cfg.beam_size, cfg.max_len);
      rec.val_cider = score_captions(caps, val).cider.mean;
    }
    rec.wall_ms = elapsed_ms(start);
    history.push_back(rec);
    report(outputs, rec);
    write_outputs(outputs, history, model, cfg);
  }
  return history;
}

std::vector<EpochRecord> pretrain_lm(const std::vector<std::string>& corpus, Model& lm, const BpeModel& bpe,
                                     const TrainConfig& cfg, const TrainOutputs& outputs) {
  cfg.validate();
  if (corpus.empty()) throw ContractError("pretrain_lm: empty corpus");
  if (lm.params.mode() != ModelMode::kLanguageModel) throw ContractError("pretrain_lm: model is not a language model");
  std::vector<std::vector<TokenId>> targets;
  targets.reserve(corpus.size());
  for (const auto& s : corpus) targets.push_back(caption_targets(bpe, s));

  AdamW opt(cfg.adam());
  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = Phase::kLm;
    rec.loss = xe_epoch(targets.size(), lm, opt, cfg, epoch,
                        [&](std::size_t i) { return xe_loss(lm, nullptr, targets[i]); });
    rec.wall_ms = elapsed_ms(start);
    history.push_back(rec);
    report(outputs, rec);
    write_outputs(outputs, history, lm, cfg);
  }
  return history;
}

}  // namespace vgpt
