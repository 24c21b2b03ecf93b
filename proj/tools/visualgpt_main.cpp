// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point. Every subcommand accepts --config FILE and any
// number of --set key=value overrides; SRAU_SEED supplies the seed when
// neither does.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "visualgpt/bpe.hpp"
#include "visualgpt/checkpoint.hpp"
#include "visualgpt/config.hpp"
#include "visualgpt/dataset.hpp"
#include "visualgpt/error.hpp"
#include "visualgpt/gate_analysis.hpp"
#include "visualgpt/gradsuite.hpp"
#include "visualgpt/io.hpp"
#include "visualgpt/training.hpp"

namespace {

using namespace vgpt;
using nlohmann::ordered_json;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  ResolvedConfig resolve() const {
    std::map<std::string, std::string> flags;
    for (const auto& s : sets) {
      auto [k, v] = split_assignment(s);
      flags[k] = v;
    }
    if (seed) flags["seed"] = std::to_string(*seed);
    return resolve_config(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path), flags);
  }
};

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
  sub->add_option("--config", c.config_path, "flat key = value configuration file");
  sub->add_option("--set", c.sets, "key=value override, repeatable; beats the config file");
  if (with_seed) sub->add_option("--seed", c.seed, "shorthand for --set seed=N");
}

std::vector<std::string> read_sentences(const std::string& path) {
  std::vector<std::string> out;
  for (auto& line : read_lines(path)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
  }
  return out;
}

ModelConfig with_vocab(ModelConfig cfg, const BpeModel& bpe) {
  if (cfg.vocab_size != 0 && cfg.vocab_size != bpe.vocab_size()) {
    throw ConfigError("vocab_size " + std::to_string(cfg.vocab_size) + " disagrees with the tokenizer's " +
                      std::to_string(bpe.vocab_size()));
  }
  cfg.vocab_size = bpe.vocab_size();
  return cfg;
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

// ---- subcommands ---------------------------------------------------------

struct GenDataArgs {
  std::string out, classes, prefix = "sw";
  std::size_t n = 100, min_objects = 1, max_objects = 3;
};

int gen_data(const Common& c, const GenDataArgs& a) {
  const auto cfg = c.resolve();
  ShapeWorldOptions o;
  o.n_examples = a.n;
  o.min_objects = a.min_objects;
  o.max_objects = a.max_objects;
  o.seed = cfg.config.train.seed;
  o.id_prefix = a.prefix;
  const auto data = gen_shapeworld(o);
  save_dataset(a.out, data);
  const std::string classes = a.classes.empty() ? a.out + ".classes.json" : a.classes;
  save_token_classes(classes, TokenClassMap(shapeworld_token_classes()));
  std::cout << "wrote " << data.size() << " examples to " << a.out << " and token classes to " << classes << "\n";
  return 0;
}

struct GenCorpusArgs {
  std::string out;
  std::size_t n = 5000, min_clauses = 1, max_clauses = 3;
};

int gen_corpus(const Common& c, const GenCorpusArgs& a) {
  const auto cfg = c.resolve();
  const auto corpus = gen_text_corpus(a.n, cfg.config.train.seed, a.min_clauses, a.max_clauses);
  std::string text;
  for (const auto& s : corpus) text += s + "\n";
  write_text_atomic(a.out, text);
  std::cout << "wrote " << corpus.size() << " sentences to " << a.out << "\n";
  return 0;
}

struct TokenizerArgs {
  std::vector<std::string> corpus, data;
  std::size_t merges = 300;
  std::string out;
};

int tokenizer_train(const TokenizerArgs& a) {
  std::vector<std::string> text;
  for (const auto& p : a.corpus) {
    const auto s = read_sentences(p);
    text.insert(text.end(), s.begin(), s.end());
  }
  for (const auto& p : a.data) {
    for (const auto& ex : load_dataset(p)) text.insert(text.end(), ex.refs.begin(), ex.refs.end());
  }
  if (text.empty()) throw ConfigError("tokenizer-train: give at least one --corpus or --data file with text");
  const auto bpe = bpe_train(text, a.merges);
  save_bpe(a.out, bpe);
  std::cout << "vocabulary of " << bpe.vocab_size() << " tokens (" << bpe.merges().size() << " merges) written to "
            << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data, val, corpus, tokenizer, out, init_lm, checkpoint, history, checkpoint_dir;
  bool quiet = false;
};

TrainOutputs outputs_of(const TrainArgs& a) { return {a.checkpoint_dir, a.history, !a.quiet}; }

int pretrain_lm_cmd(const Common& c, const TrainArgs& a) {
  const auto cfg = c.resolve().config;
  const auto corpus = read_sentences(a.corpus);
  const auto bpe = load_bpe(a.tokenizer);
  Model lm = make_model(with_vocab(cfg.model, bpe), ModelMode::kLanguageModel, cfg.train.seed);
  const auto hist = pretrain_lm(corpus, lm, bpe, cfg.train, outputs_of(a));
  save_checkpoint(a.out, make_checkpoint(lm, cfg.train.seed, hist.size(), a.history));
  std::cout << "language model written to " << a.out << "\n";
  return 0;
}

std::vector<CaptionExample> maybe_load(const std::string& path) {
  return path.empty() ? std::vector<CaptionExample>{} : load_dataset(path);
}

int train_cmd(const Common& c, const TrainArgs& a) {
  const auto cfg = c.resolve().config;
  const auto train = load_dataset(a.data);
  const auto val = maybe_load(a.val);
  const auto bpe = load_bpe(a.tokenizer);
  const ModelConfig mc = with_vocab(cfg.model, bpe);
  Model model = a.init_lm.empty() ? make_model(mc, ModelMode::kCaptioner, cfg.train.seed)
                                  : init_captioner_from_lm(load_checkpoint(a.init_lm).model(), mc, cfg.train.seed);
  const auto hist = train_loop(train, val, model, bpe, cfg.train, Phase::kXe, outputs_of(a));
  save_checkpoint(a.out, make_checkpoint(model, cfg.train.seed, hist.size(), a.history));
  std::cout << "captioner written to " << a.out << "\n";
  return 0;
}

int finetune_rl_cmd(const Common& c, const TrainArgs& a) {
  const auto cfg = c.resolve().config;
  const auto train = load_dataset(a.data);
  const auto val = maybe_load(a.val);
  const auto bpe = load_bpe(a.tokenizer);
  const auto ckpt = load_checkpoint(a.checkpoint);
  check_compatible(ckpt, with_vocab(ckpt.config, bpe));
  Model model = ckpt.model();
  const auto hist = train_loop(train, val, model, bpe, cfg.train, Phase::kRl, outputs_of(a));
  save_checkpoint(a.out, make_checkpoint(model, cfg.train.seed, ckpt.epoch + hist.size(), a.history));
  std::cout << "captioner written to " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string data, checkpoint, tokenizer, candidates, out;
};

// Candidates: JSONL records with "id" and either "caption" or "refs" (the
// first reference is taken), matched to the evaluation set by id.
std::vector<std::string> read_candidates(const std::string& path, const std::vector<CaptionExample>& examples) {
  std::map<std::string, std::string> by_id;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = j.at("id").get<std::string>();
      by_id[id] = j.contains("caption") ? j.at("caption").get<std::string>()
                                        : j.at("refs").at(0).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<std::string> out;
  for (const auto& ex : examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw LookupError(path + ": no candidate for example '" + ex.id + "'");
    out.push_back(it->second);
  }
  return out;
}

int eval_cmd(const Common& c, const EvalArgs& a) {
  const auto cfg = c.resolve().config;
  const auto examples = load_dataset(a.data);
  std::vector<std::string> candidates;
  if (!a.candidates.empty()) {
    candidates = read_candidates(a.candidates, examples);
  } else {
    if (a.checkpoint.empty() || a.tokenizer.empty()) {
      throw ConfigError("eval: give --candidates, or --checkpoint with --tokenizer");
    }
    const auto bpe = load_bpe(a.tokenizer);
    const auto ckpt = load_checkpoint(a.checkpoint);
    check_compatible(ckpt, with_vocab(ckpt.config, bpe));
    candidates = generate_captions(ckpt.model(), bpe, examples, cfg.train.greedy_eval ? 1 : cfg.train.beam_size,
                                   cfg.train.max_len);
  }
  const auto rep = score_captions(candidates, examples);
  ordered_json j;
  j["bleu"] = rep.bleu.scores;
  j["cider_d"] = rep.cider.mean;
  j["per_image"] = ordered_json::array();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    j["per_image"].push_back({{"id", examples[i].id}, {"candidate", candidates[i]}, {"cider_d", rep.cider.per_image[i]}});
  }
  if (!rep.bleu.warning.empty()) j["warning"] = rep.bleu.warning;
  if (!a.out.empty()) write_text_atomic(a.out, j.dump(2) + "\n");
  print_json(j);
  return 0;
}

struct GateArgs {
  std::string data, checkpoint, tokenizer, classes, out_dir;
  std::size_t extremes = 5;
};

int analyze_gates_cmd(const Common& c, const GateArgs& a) {
  const auto cfg = c.resolve().config;
  const auto bpe = load_bpe(a.tokenizer);
  const auto ckpt = load_checkpoint(a.checkpoint);
  check_compatible(ckpt, with_vocab(ckpt.config, bpe));
  const TokenClassMap classes =
      a.classes.empty() ? TokenClassMap(shapeworld_token_classes()) : load_token_classes(a.classes);
  const auto examples = load_dataset(a.data);
  const auto analysis = analyze_gates(ckpt.model(), bpe, examples, classes,
                                      cfg.train.greedy_eval ? 1 : cfg.train.beam_size, cfg.train.max_len);

  const std::string dir = a.out_dir.empty() ? std::string(".") : a.out_dir;
  write_text_atomic(dir + "/gate_distributions.json",
                    distributions_to_json(layer_distributions(analysis.trace, a.extremes)) + "\n");
  ordered_json means(analysis.class_means);
  write_text_atomic(dir + "/class_means.json", means.dump(2) + "\n");
  const auto paths = highlight_report(analysis.highlights, dir + "/visual_scores.html");

  ordered_json j;
  j["class_means"] = means;
  j["tokens"] = analysis.scores.size();
  j["report"] = paths.html;
  print_json(j);
  return 0;
}

struct GradArgs {
  std::size_t points = 20;
  double tol = 1e-4;
};

int grad_check_cmd(const Common& c, const GradArgs& a) {
  const auto cfg = c.resolve().config;
  GradSuiteOptions o;
  o.points = a.points;
  o.seed = cfg.train.seed;
  auto groups = primitive_gradient_suite(o);
  groups.push_back(xe_gradient_check(cfg.model, o));

  std::vector<std::string> failed;
  std::printf("%-24s %12s %8s %8s\n", "group", "max_rel_err", "checked", "skipped");
  for (const auto& g : groups) {
    std::printf("%-24s %12.3e %8zu %8zu\n", g.group.c_str(), g.max_rel_error, g.checked, g.skipped);
    if (!(g.max_rel_error < a.tol)) failed.push_back(g.group + " (" + g.worst + ")");
  }
  if (!failed.empty()) {
    std::string msg;
    for (const auto& f : failed) msg += (msg.empty() ? "" : ", ") + f;
    throw NumericError("gradient check above tolerance in " + msg);
  }
  return 0;
}

int show_config_cmd(const Common& c) {
  const auto r = c.resolve();
  for (const auto& k : config_keys()) {
    std::cout << k << " = " << config_value(r.config, k) << "  # " << to_string(r.sources.at(k)) << "\n";
  }
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visualgpt: gated encoder-decoder captioning on a pretrained decoder, at desk scale"};
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;
  GenDataArgs gd;
  GenCorpusArgs gc;
  TokenizerArgs tk;
  TrainArgs tr;
  EvalArgs ev;
  GateArgs ga;
  GradArgs gr;

  auto* s_data = app.add_subcommand("gen-data", "generate a shape-world caption dataset (JSONL)");
  add_common(s_data, common);
  s_data->add_option("--out", gd.out, "dataset path")->required();
  s_data->add_option("--n", gd.n, "number of examples");
  s_data->add_option("--min-objects", gd.min_objects);
  s_data->add_option("--max-objects", gd.max_objects);
  s_data->add_option("--prefix", gd.prefix, "example id prefix");
  s_data->add_option("--classes", gd.classes, "token-class sidecar path (default: <out>.classes.json)");

  auto* s_corpus = app.add_subcommand("gen-corpus", "generate the language-model text corpus");
  add_common(s_corpus, common);
  s_corpus->add_option("--out", gc.out, "corpus path, one sentence per line")->required();
  s_corpus->add_option("--n", gc.n, "number of sentences");
  s_corpus->add_option("--min-clauses", gc.min_clauses);
  s_corpus->add_option("--max-clauses", gc.max_clauses);

  auto* s_tok = app.add_subcommand("tokenizer-train", "learn BPE merges");
  s_tok->add_option("--corpus", tk.corpus, "text file, one sentence per line (repeatable)");
  s_tok->add_option("--data", tk.data, "dataset whose references join the corpus (repeatable)");
  s_tok->add_option("--merges", tk.merges, "number of merges");
  s_tok->add_option("--out", tk.out, "tokenizer JSON path")->required();

  auto add_train_io = [&](CLI::App* s) {
    add_common(s, common);
    s->add_option("--tokenizer", tr.tokenizer, "tokenizer JSON")->required();
    s->add_option("--out", tr.out, "checkpoint to write")->required();
    s->add_option("--history", tr.history, "JSONL training history");
    s->add_option("--checkpoint-dir", tr.checkpoint_dir, "directory for per-epoch checkpoints");
    s->add_flag("--quiet", tr.quiet, "no per-epoch progress on stderr");
  };
  auto* s_lm = app.add_subcommand("pretrain-lm", "pretrain the decoder as a language model");
  add_train_io(s_lm);
  s_lm->add_option("--corpus", tr.corpus, "text corpus")->required();

  auto* s_train = app.add_subcommand("train", "cross-entropy caption training");
  add_train_io(s_train);
  s_train->add_option("--data", tr.data, "training dataset")->required();
  s_train->add_option("--val", tr.val, "validation dataset");
  s_train->add_option("--init-lm", tr.init_lm, "language-model checkpoint to start the decoder from");

  auto* s_rl = app.add_subcommand("finetune-rl", "self-critical fine-tuning with a CIDEr-D reward");
  add_train_io(s_rl);
  s_rl->add_option("--data", tr.data, "training dataset")->required();
  s_rl->add_option("--val", tr.val, "validation dataset");
  s_rl->add_option("--checkpoint", tr.checkpoint, "captioner to fine-tune")->required();

  auto* s_eval = app.add_subcommand("eval", "BLEU-1..4 and CIDEr-D as JSON");
  add_common(s_eval, common);
  s_eval->add_option("--data", ev.data, "dataset with references")->required();
  s_eval->add_option("--checkpoint", ev.checkpoint, "captioner to decode with");
  s_eval->add_option("--tokenizer", ev.tokenizer);
  s_eval->add_option("--candidates", ev.candidates, "JSONL of {id, caption} instead of decoding");
  s_eval->add_option("--out", ev.out, "also write the JSON here");

  auto* s_gates = app.add_subcommand("analyze-gates", "gate distributions, class means and an HTML report");
  add_common(s_gates, common);
  s_gates->add_option("--data", ga.data)->required();
  s_gates->add_option("--checkpoint", ga.checkpoint)->required();
  s_gates->add_option("--tokenizer", ga.tokenizer)->required();
  s_gates->add_option("--classes", ga.classes, "token-class JSON (default: shape-world classes)");
  s_gates->add_option("--out-dir", ga.out_dir);
  s_gates->add_option("--extremes", ga.extremes, "tokens listed at each end of the visual-score range");

  auto* s_grad = app.add_subcommand("grad-check", "finite-difference check of every gradient");
  add_common(s_grad, common);
  s_grad->add_option("--points", gr.points, "random inputs per group");
  s_grad->add_option("--tol", gr.tol, "maximum relative error");

  auto* s_show = app.add_subcommand("show-config", "print the resolved configuration and where each value came from");
  add_common(s_show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage: " << one_line(e.what()) << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*s_data) return gen_data(common, gd);
    if (*s_corpus) return gen_corpus(common, gc);
    if (*s_tok) return tokenizer_train(tk);
    if (*s_lm) return pretrain_lm_cmd(common, tr);
    if (*s_train) return train_cmd(common, tr);
    if (*s_rl) return finetune_rl_cmd(common, tr);
    if (*s_eval) return eval_cmd(common, ev);
    if (*s_gates) return analyze_gates_cmd(common, ga);
    if (*s_grad) return grad_check_cmd(common, gr);
    if (*s_show) return show_config_cmd(common);
  } catch (const vgpt::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 2;
}
