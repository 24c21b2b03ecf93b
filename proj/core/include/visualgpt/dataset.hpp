// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "visualgpt/tensor.hpp"

namespace vgpt {

// Shape-world: each object is one-hot shape (3) | one-hot color (3) |
// one-hot size (2) | position (x, y) in [0, 1].
inline constexpr std::size_t kShapeWorldFeatureDim = 10;

struct CaptionExample {
  std::string id;
  std::vector<std::vector<double>> objects;
  std::vector<std::string> refs;

  /// objects as an o x feature_dim tensor
  Tensor features() const;
  void validate() const;
};

struct AttributeVocabulary {
  std::vector<std::string> shapes;
  std::vector<std::string> colors;
  std::vector<std::string> sizes;
};

/// Words that appear in shape-world captions.
const AttributeVocabulary& shapeworld_vocabulary();
/// Strict superset used for the language-model corpus.
const AttributeVocabulary& corpus_vocabulary();

struct ShapeWorldOptions {
  std::size_t n_examples = 100;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  std::uint64_t seed = 0;
  std::string id_prefix = "sw";
};

/// Objects are listed left to right; the first reference reads
/// "a <size> <color> <shape> and a ..." and the second swaps size and color.
std::vector<CaptionExample> gen_shapeworld(const ShapeWorldOptions& opts);

/// Sentences from the same template grammar over corpus_vocabulary().
std::vector<std::string> gen_text_corpus(std::size_t n_sentences, std::uint64_t seed, std::size_t min_clauses = 1,
                                         std::size_t max_clauses = 3);

/// Word -> class label (DET, CONJ, ADJ, NOUN) for every word the generators emit.
std::map<std::string, std::string> shapeworld_token_classes();

void save_dataset(const std::string& path, const std::vector<CaptionExample>& examples);
/// Throws FormatError naming the line number of the first corrupt record.
std::vector<CaptionExample> load_dataset(const std::string& path);

std::string to_jsonl(const std::vector<CaptionExample>& examples);
std::vector<CaptionExample> parse_jsonl(const std::string& text, const std::string& origin = "<memory>");

}  // namespace vgpt
