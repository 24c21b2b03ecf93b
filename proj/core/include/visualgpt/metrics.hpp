// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace vgpt {

using Words = std::vector<std::string>;

/// Lowercases and splits on whitespace.
Words tokenize_caption(const std::string& text);

/// n-gram -> count for n = 1..max_n. Keys join the words with '\x1f'.
using NGramCounts = std::unordered_map<std::string, int>;
NGramCounts count_ngrams(const Words& words, int max_n, int min_n = 1);
/// Number of words in an n-gram key.
int ngram_order(const std::string& key);

struct BleuResult {
  std::vector<double> scores;      ///< BLEU-1 .. BLEU-max_n
  std::vector<double> precisions;  ///< clipped precision per order
  double brevity_penalty = 0.0;
  std::string warning;             ///< set for degenerate input, e.g. empty candidate
};

/// Sentence BLEU: clipped n-gram precisions, geometric mean over orders
/// 1..n, brevity penalty exp(1 - r/c) when c < r, r the closest reference
/// length (shorter wins ties). No smoothing: a zero precision gives 0.
BleuResult bleu(const Words& candidate, const std::vector<Words>& references, int max_n = 4);

/// Corpus BLEU: clipped counts and lengths are summed over all candidates
/// before the precisions and the brevity penalty are formed.
BleuResult corpus_bleu(const std::vector<Words>& candidates, const std::vector<std::vector<Words>>& references,
                       int max_n = 4);

struct CiderResult {
  std::vector<double> per_image;
  double mean = 0.0;
};

/// CIDEr-D: TF-IDF weighted n-gram vectors (n = 1..4), clipped cosine
/// similarity against each reference, gaussian length penalty (sigma = 6),
/// averaged over n and references and scaled by 10. Document frequency
/// counts the images whose reference set contains an n-gram.
class CiderD {
 public:
  /// Builds document frequencies from the reference sets of a corpus.
  explicit CiderD(const std::vector<std::vector<Words>>& corpus_references, int max_n = 4, double sigma = 6.0);

  double score(const Words& candidate, const std::vector<Words>& references) const;
  CiderResult evaluate(const std::vector<Words>& candidates, const std::vector<std::vector<Words>>& references) const;

  std::size_t corpus_size() const noexcept { return corpus_size_; }
  int document_frequency(const std::string& ngram_key) const;

 private:
  struct Vec {
    std::vector<std::unordered_map<std::string, double>> weights;
    std::vector<double> norms;
    std::size_t length = 0;
  };
  Vec vectorize(const Words& words) const;
  double similarity(const Vec& hyp, const Vec& ref) const;

  int max_n_;
  double sigma_;
  std::size_t corpus_size_;
  double log_corpus_size_;
  std::unordered_map<std::string, int> df_;
};

/// Convenience: CIDEr-D with document frequencies taken from `references`.
CiderResult cider_d(const std::vector<Words>& candidates, const std::vector<std::vector<Words>>& references);

}  // namespace vgpt
