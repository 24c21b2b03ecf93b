// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "visualgpt/bpe.hpp"
#include "visualgpt/dataset.hpp"
#include "visualgpt/model.hpp"

namespace vgpt {

/// Gate vectors of one generated token at one decoder layer.
struct GateRecord {
  std::size_t caption = 0;   ///< index of the caption within the analysed set
  std::size_t position = 0;  ///< index of the token within its caption
  std::string token;         ///< token text without its leading space
  std::size_t layer = 0;
  std::vector<double> b_vis;
  std::vector<double> b_lan;
};

using GateTrace = std::vector<GateRecord>;

/// Decodes a caption for one image and records, for every generated
/// non-special token, the gates of every decoder layer at the position that
/// predicted it.
GateTrace trace_caption(const Model& model, const BpeModel& bpe, const EncoderOutput& enc,
                        std::span<const TokenId> generated, std::size_t caption_index);

/// Mean of b_vis in the record for `last_layer`. Throws AnalysisError when
/// the token has no such record.
double visual_score(std::span<const GateRecord> token_records, std::size_t last_layer);

/// Min-max normalization to [0, 1]; a constant input maps to 0.5.
std::vector<double> normalize_scores(std::span<const double> scores);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;   ///< smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0;  ///< largest value <= q3 + 1.5 IQR
};

/// Quartiles by linear interpolation between closest ranks, position
/// p * (n - 1) of the sorted values.
BoxStats box_stats(std::vector<double> values);

struct LayerSummary {
  std::size_t layer = 0;
  BoxStats b_vis;
  BoxStats b_lan;
};

struct TokenScore {
  std::size_t caption = 0;
  std::size_t position = 0;
  std::string token;
  double score = 0.0;
};

struct GateDistributions {
  std::vector<LayerSummary> layers;
  std::vector<TokenScore> highest;  ///< highest last-layer visual scores, best first
  std::vector<TokenScore> lowest;   ///< lowest last-layer visual scores, lowest first
};

/// Box statistics over every gate entry per decoder layer plus the
/// `extremes` tokens with the highest and lowest visual scores.
GateDistributions layer_distributions(const GateTrace& trace, std::size_t extremes = 5);

/// Visual score of every traced token (from its highest-numbered layer's
/// record, i.e. the last decoder layer).
std::vector<TokenScore> token_scores(const GateTrace& trace);

class TokenClassMap {
 public:
  static constexpr const char* kOther = "OTHER";

  TokenClassMap() = default;
  explicit TokenClassMap(std::map<std::string, std::string> classes);

  const std::string& classify(const std::string& token) const;
  std::size_t size() const noexcept { return classes_.size(); }
  const std::map<std::string, std::string>& entries() const noexcept { return classes_; }

  std::string to_json() const;
  static TokenClassMap from_json(const std::string& text);

 private:
  std::map<std::string, std::string> classes_;
};

TokenClassMap load_token_classes(const std::string& path);
void save_token_classes(const std::string& path, const TokenClassMap& map);

/// Class -> mean of the given (normalized) scores of its tokens.
std::map<std::string, double> class_means(std::span<const TokenScore> scores, const TokenClassMap& map);

struct CaptionHighlight {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<double> scores;      ///< normalized to [0, 1]
  std::vector<double> raw_scores;  ///< before normalization
};

/// "rgb(r,0,b)" on a red (0) to blue (1) scale.
std::string score_color(double normalized);

struct ReportPaths {
  std::string html;
  std::string sidecar;
};

/// Writes a standalone HTML page with every token colored by its score and
/// a JSON sidecar (same path, extension .json) holding the scores.
ReportPaths highlight_report(const std::vector<CaptionHighlight>& captions, const std::string& html_path);

/// Parses a sidecar back into captions.
std::vector<CaptionHighlight> read_highlight_sidecar(const std::string& path);

std::string distributions_to_json(const GateDistributions& d);

struct GateAnalysis {
  std::vector<std::string> captions;
  GateTrace trace;
  std::vector<TokenScore> scores;             ///< raw visual scores
  std::vector<double> normalized;             ///< min-max over every analysed token
  std::map<std::string, double> class_means;  ///< of the normalized scores
  std::vector<CaptionHighlight> highlights;
};

/// Captions every example (greedy when beam_size is 1), traces the gates
/// and summarizes the visual scores by token class.
GateAnalysis analyze_gates(const Model& model, const BpeModel& bpe, const std::vector<CaptionExample>& examples,
                           const TokenClassMap& classes, std::size_t beam_size, std::size_t max_len);

}  // namespace vgpt
