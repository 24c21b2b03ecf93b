// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "visualgpt/error.hpp"

namespace vgpt {

namespace {

constexpr char kSep = '\x1f';

std::size_t closest_ref_length(std::size_t c, const std::vector<Words>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = r.size() > c ? r.size() - c : c - r.size();
    const auto bd = best > c ? best - c : c - best;
    if (d < bd || (d == bd && r.size() < best)) best = r.size();
  }
  return best;
}

// Clipped matches and candidate totals per order for one sentence.
void clipped_counts(const Words& cand, const std::vector<Words>& refs, int max_n, std::vector<double>& matched,
                    std::vector<double>& total) {
  const auto cand_counts = count_ngrams(cand, max_n);
  std::unordered_map<std::string, int> max_ref;
  for (const auto& r : refs)
    for (const auto& [k, c] : count_ngrams(r, max_n)) max_ref[k] = std::max(max_ref[k], c);
  for (const auto& [k, c] : cand_counts) {
    const int n = ngram_order(k);
    auto it = max_ref.find(k);
    matched[n - 1] += std::min(c, it == max_ref.end() ? 0 : it->second);
    total[n - 1] += c;
  }
}

BleuResult combine(const std::vector<double>& matched, const std::vector<double>& total, double c, double r,
                   int max_n) {
  BleuResult out;
  out.precisions.resize(max_n);
  for (int n = 0; n < max_n; ++n) out.precisions[n] = total[n] > 0 ? matched[n] / total[n] : 0.0;
  out.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    const double p = out.precisions[n - 1];
    if (p <= 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    out.scores.push_back(zero ? 0.0 : out.brevity_penalty * std::exp(log_sum / n));
  }
  return out;
}

}  // namespace

Words tokenize_caption(const std::string& text) {
  Words out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out.push_back(w);
  }
  return out;
}

NGramCounts count_ngrams(const Words& words, int max_n, int min_n) {
  NGramCounts counts;
  for (int n = min_n; n <= max_n; ++n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
      std::string key = words[i];
      for (int j = 1; j < n; ++j) {
        key += kSep;
        key += words[i + static_cast<std::size_t>(j)];
      }
      ++counts[key];
    }
  }
  return counts;
}

int ngram_order(const std::string& key) { return 1 + static_cast<int>(std::count(key.begin(), key.end(), kSep)); }

BleuResult bleu(const Words& candidate, const std::vector<Words>& references, int max_n) {
  if (references.empty()) throw ContractError("bleu: no references");
  if (candidate.empty()) {
    BleuResult out;
    out.scores.assign(max_n, 0.0);
    out.precisions.assign(max_n, 0.0);
    out.warning = "empty candidate";
    return out;
  }
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  clipped_counts(candidate, references, max_n, matched, total);
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(closest_ref_length(candidate.size(), references));
  return combine(matched, total, c, r, max_n);
}

BleuResult corpus_bleu(const std::vector<Words>& candidates, const std::vector<std::vector<Words>>& references,
                       int max_n) {
  if (candidates.size() != references.size()) throw ContractError("corpus_bleu: candidate/reference count mismatch");
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  double c = 0.0, r = 0.0;
  std::size_t empty = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw ContractError("corpus_bleu: image without references");
    if (candidates[i].empty()) ++empty;
    clipped_counts(candidates[i], references[i], max_n, matched, total);
    c += static_cast<double>(candidates[i].size());
    r += static_cast<double>(closest_ref_length(candidates[i].size(), references[i]));
  }
  if (c == 0.0) {
    BleuResult out;
    out.scores.assign(max_n, 0.0);
    out.precisions.assign(max_n, 0.0);
    out.warning = "all candidates empty";
    return out;
  }
  auto out = combine(matched, total, c, r, max_n);
  if (empty) out.warning = std::to_string(empty) + " empty candidate(s)";
  return out;
}

CiderD::CiderD(const std::vector<std::vector<Words>>& corpus_references, int max_n, double sigma)
    : max_n_(max_n), sigma_(sigma), corpus_size_(corpus_references.size()) {
  if (corpus_references.empty()) throw ContractError("cider_d: empty reference corpus");
  log_corpus_size_ = std::log(static_cast<double>(corpus_size_));
  for (const auto& refs : corpus_references) {
    std::set<std::string> seen;
    for (const auto& r : refs)
      for (const auto& [k, _] : count_ngrams(r, max_n_)) seen.insert(k);
    for (const auto& k : seen) ++df_[k];
  }
}

int CiderD::document_frequency(const std::string& key) const {
  auto it = df_.find(key);
  return it == df_.end() ? 0 : it->second;
}

CiderD::Vec CiderD::vectorize(const Words& words) const {
  Vec v;
  v.weights.resize(max_n_);
  v.norms.assign(max_n_, 0.0);
  v.length = words.size();
  for (const auto& [k, tf] : count_ngrams(words, max_n_)) {
    const int n = ngram_order(k) - 1;
    const double df = std::log(std::max(1.0, static_cast<double>(document_frequency(k))));
    const double w = static_cast<double>(tf) * (log_corpus_size_ - df);
    v.weights[n][k] = w;
    v.norms[n] += w * w;
  }
  for (auto& n : v.norms) n = std::sqrt(n);
  return v;
}

double CiderD::similarity(const Vec& hyp, const Vec& ref) const {
  const double delta = static_cast<double>(hyp.length) - static_cast<double>(ref.length);
  const double penalty = std::exp(-(delta * delta) / (2.0 * sigma_ * sigma_));
  double total = 0.0;
  for (int n = 0; n < max_n_; ++n) {
    double val = 0.0;
    for (const auto& [k, wh] : hyp.weights[n]) {
      auto it = ref.weights[n].find(k);
      if (it == ref.weights[n].end()) continue;
      val += std::min(wh, it->second) * it->second;
    }
    if (hyp.norms[n] != 0.0 && ref.norms[n] != 0.0) val /= hyp.norms[n] * ref.norms[n];
    total += val * penalty;
  }
  return total / max_n_;
}

double CiderD::score(const Words& candidate, const std::vector<Words>& references) const {
  if (references.empty()) throw ContractError("cider_d: image without references");
  const Vec hyp = vectorize(candidate);
  double acc = 0.0;
  for (const auto& r : references) acc += similarity(hyp, vectorize(r));
  return 10.0 * acc / static_cast<double>(references.size());
}

CiderResult CiderD::evaluate(const std::vector<Words>& candidates,
                             const std::vector<std::vector<Words>>& references) const {
  if (candidates.size() != references.size()) throw ContractError("cider_d: candidate/reference count mismatch");
  CiderResult out;
  out.per_image.reserve(candidates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.per_image.push_back(score(candidates[i], references[i]));
    total += out.per_image.back();
  }
  out.mean = candidates.empty() ? 0.0 : total / static_cast<double>(candidates.size());
  return out;
}

CiderResult cider_d(const std::vector<Words>& candidates, const std::vector<std::vector<Words>>& references) {
  return CiderD(references).evaluate(candidates, references);
}

}  // namespace vgpt
