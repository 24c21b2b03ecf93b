// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/gate_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <json.hpp>

#include "visualgpt/decode.hpp"
#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"

namespace vgpt {

namespace {

using nlohmann::json;

std::string strip_space(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  return b == std::string::npos ? std::string{} : s.substr(b);
}

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

json box_json(const BoxStats& b) {
  return json{{"min", b.min},       {"q1", b.q1},
              {"median", b.median}, {"q3", b.q3},
              {"max", b.max},       {"whisker_low", b.whisker_low},
              {"whisker_high", b.whisker_high}};
}

json token_json(const TokenScore& t) {
  return json{{"caption", t.caption}, {"position", t.position}, {"token", t.token}, {"score", t.score}};
}

}  // namespace

GateTrace trace_caption(const Model& model, const BpeModel& bpe, const EncoderOutput& enc,
                        std::span<const TokenId> generated, std::size_t caption_index) {
  GateTrace trace;
  if (generated.empty()) return trace;
  std::vector<TokenId> input{BpeModel::kBos};
  input.insert(input.end(), generated.begin(), generated.end() - 1);
  std::vector<LayerGates> gates;
  DecoderOptions opts;
  opts.gate_sink = &gates;
  {
    NoGradScope no_grad;
    decoder_forward(input, &enc, model, opts);
  }
  const std::size_t s = model.config.hidden;
  for (std::size_t p = 0; p < generated.size(); ++p) {
    if (BpeModel::is_special(generated[p])) continue;
    for (const auto& lg : gates) {
      GateRecord r;
      r.caption = caption_index;
      r.position = p;
      r.token = strip_space(bpe.token(generated[p]));
      r.layer = lg.layer;
      const auto vis = lg.b_vis.data().subspan(p * s, s);
      const auto lan = lg.b_lan.data().subspan(p * s, s);
      r.b_vis.assign(vis.begin(), vis.end());
      r.b_lan.assign(lan.begin(), lan.end());
      trace.push_back(std::move(r));
    }
  }
  return trace;
}

double visual_score(std::span<const GateRecord> token_records, std::size_t last_layer) {
  for (const auto& r : token_records) {
    if (r.layer != last_layer) continue;
    if (r.b_vis.empty()) throw AnalysisError("visual_score: empty gate vector");
    return std::accumulate(r.b_vis.begin(), r.b_vis.end(), 0.0) / static_cast<double>(r.b_vis.size());
  }
  throw AnalysisError("visual_score: no record for decoder layer " + std::to_string(last_layer));
}

std::vector<double> normalize_scores(std::span<const double> scores) {
  if (scores.empty()) return {};
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double a = *lo, range = *hi - *lo;
  std::vector<double> out(scores.size(), 0.5);
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - a) / range;
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw AnalysisError("box_stats: no values");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::lower_bound(values.begin(), values.end(), lo);
  b.whisker_high = *(std::upper_bound(values.begin(), values.end(), hi) - 1);
  return b;
}

std::vector<TokenScore> token_scores(const GateTrace& trace) {
  // Records of one token are contiguous; the last layer is the largest index.
  std::vector<TokenScore> out;
  std::size_t i = 0;
  while (i < trace.size()) {
    std::size_t j = i;
    std::size_t last = 0;
    while (j < trace.size() && trace[j].caption == trace[i].caption && trace[j].position == trace[i].position) {
      last = std::max(last, trace[j].layer);
      ++j;
    }
    const std::span<const GateRecord> recs(trace.data() + i, j - i);
    out.push_back({trace[i].caption, trace[i].position, trace[i].token, visual_score(recs, last)});
    i = j;
  }
  return out;
}

GateDistributions layer_distributions(const GateTrace& trace, std::size_t extremes) {
  if (trace.empty()) throw AnalysisError("layer_distributions: empty trace");
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> per_layer;
  for (const auto& r : trace) {
    auto& [vis, lan] = per_layer[r.layer];
    vis.insert(vis.end(), r.b_vis.begin(), r.b_vis.end());
    lan.insert(lan.end(), r.b_lan.begin(), r.b_lan.end());
  }
  GateDistributions d;
  for (auto& [layer, vl] : per_layer) {
    d.layers.push_back({layer, box_stats(std::move(vl.first)), box_stats(std::move(vl.second))});
  }
  auto scores = token_scores(trace);
  std::stable_sort(scores.begin(), scores.end(),
                   [](const TokenScore& a, const TokenScore& b) { return a.score > b.score; });
  const std::size_t k = std::min(extremes, scores.size());
  d.highest.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k));
  d.lowest.assign(scores.rbegin(), scores.rbegin() + static_cast<std::ptrdiff_t>(k));
  return d;
}

TokenClassMap::TokenClassMap(std::map<std::string, std::string> classes) : classes_(std::move(classes)) {
  for (const auto& [tok, cls] : classes_) {
    if (cls.empty()) throw FormatError("token class map: empty class for '" + tok + "'");
  }
}

const std::string& TokenClassMap::classify(const std::string& token) const {
  static const std::string other = kOther;
  auto it = classes_.find(token);
  return it == classes_.end() ? other : it->second;
}

std::string TokenClassMap::to_json() const { return json(classes_).dump(2) + "\n"; }

TokenClassMap TokenClassMap::from_json(const std::string& text) {
  try {
    return TokenClassMap(json::parse(text).get<std::map<std::string, std::string>>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("token class map: ") + e.what());
  }
}

TokenClassMap load_token_classes(const std::string& path) { return TokenClassMap::from_json(read_text_file(path)); }

void save_token_classes(const std::string& path, const TokenClassMap& map) { write_text_atomic(path, map.to_json()); }

std::map<std::string, double> class_means(std::span<const TokenScore> scores, const TokenClassMap& map) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : scores) {
    auto& [total, n] = acc[map.classify(s.token)];
    total += s.score;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [cls, tn] : acc) out[cls] = tn.first / static_cast<double>(tn.second);
  return out;
}

std::string score_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const auto r = static_cast<int>(std::lround(255.0 * (1.0 - s)));
  const auto b = static_cast<int>(std::lround(255.0 * s));
  return "rgb(" + std::to_string(r) + ",0," + std::to_string(b) + ")";
}

ReportPaths highlight_report(const std::vector<CaptionHighlight>& captions, const std::string& html_path) {
  std::string html =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>visual scores</title>\n"
      "<style>body{font-family:sans-serif}span.t{color:#fff;padding:1px 4px;margin:1px;border-radius:3px}"
      "</style>\n</head>\n<body>\n<h1>Visual scores</h1>\n<p>blue: high visual score, red: low</p>\n";
  json side = json::array();
  for (const auto& c : captions) {
    if (c.tokens.size() != c.scores.size() || c.tokens.size() != c.raw_scores.size()) {
      throw ContractError("highlight_report: caption '" + c.id + "' has mismatched token and score counts");
    }
    html += "<p class=\"caption\" data-id=\"" + html_escape(c.id) + "\">";
    for (std::size_t i = 0; i < c.tokens.size(); ++i) {
      html += "<span class=\"t\" style=\"background:" + score_color(c.scores[i]) + "\" title=\"" +
              std::to_string(c.scores[i]) + "\">" + html_escape(c.tokens[i]) + "</span>";
    }
    html += "</p>\n";
    side.push_back(json{{"id", c.id}, {"tokens", c.tokens}, {"scores", c.scores}, {"raw_scores", c.raw_scores}});
  }
  html += "</body>\n</html>\n";

  ReportPaths paths{html_path, std::filesystem::path(html_path).replace_extension(".json").string()};
  if (paths.sidecar == paths.html) paths.sidecar += ".json";
  write_text_atomic(paths.html, html);
  write_text_atomic(paths.sidecar, side.dump(2) + "\n");
  return paths;
}

std::vector<CaptionHighlight> read_highlight_sidecar(const std::string& path) {
  try {
    std::vector<CaptionHighlight> out;
    for (const auto& e : json::parse(read_text_file(path))) {
      out.push_back({e.at("id").get<std::string>(), e.at("tokens").get<std::vector<std::string>>(),
                     e.at("scores").get<std::vector<double>>(), e.at("raw_scores").get<std::vector<double>>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string distributions_to_json(const GateDistributions& d) {
  json j;
  j["layers"] = json::array();
  for (const auto& l : d.layers) {
    j["layers"].push_back(json{{"layer", l.layer}, {"b_vis", box_json(l.b_vis)}, {"b_lan", box_json(l.b_lan)}});
  }
  j["highest"] = json::array();
  for (const auto& t : d.highest) j["highest"].push_back(token_json(t));
  j["lowest"] = json::array();
  for (const auto& t : d.lowest) j["lowest"].push_back(token_json(t));
  return j.dump(2) + "\n";
}

GateAnalysis analyze_gates(const Model& model, const BpeModel& bpe, const std::vector<CaptionExample>& examples,
                           const TokenClassMap& classes, std::size_t beam_size, std::size_t max_len) {
  GateAnalysis out;
  NoGradScope no_grad;
  const std::size_t cap = std::min(max_len, model.config.max_seq_len - 1);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncoderOutput enc = encoder_forward(examples[i].features(), model);
    const auto tokens = beam_size <= 1 ? greedy_decode(model_logprobs(model, &enc), cap).tokens
                                       : beam_search(model, enc, beam_size, cap).front().tokens;
    out.captions.push_back(bpe.decode(tokens));
    auto trace = trace_caption(model, bpe, enc, tokens, i);
    out.trace.insert(out.trace.end(), std::make_move_iterator(trace.begin()), std::make_move_iterator(trace.end()));
  }
  out.scores = token_scores(out.trace);
  std::vector<double> raw;
  for (const auto& s : out.scores) raw.push_back(s.score);
  if (raw.empty()) return out;
  out.normalized = normalize_scores(raw);

  std::vector<TokenScore> norm = out.scores;
  for (std::size_t k = 0; k < norm.size(); ++k) norm[k].score = out.normalized[k];
  out.class_means = class_means(norm, classes);

  out.highlights.resize(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) out.highlights[i].id = examples[i].id;
  for (std::size_t k = 0; k < norm.size(); ++k) {
    auto& h = out.highlights[norm[k].caption];
    h.tokens.push_back(norm[k].token);
    h.scores.push_back(norm[k].score);
    h.raw_scores.push_back(out.scores[k].score);
  }
  return out;
}

}  // namespace vgpt
