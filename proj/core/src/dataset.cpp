// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/dataset.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "visualgpt/error.hpp"
#include "visualgpt/io.hpp"

namespace vgpt {

namespace {

struct Object {
  std::size_t shape, color, size;
  double x, y;
};

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Positions on a 1/100 grid keep the files readable.
double draw_coord(std::mt19937_64& rng) { return static_cast<double>(draw(rng, 0, 100)) / 100.0; }

std::string clause(const AttributeVocabulary& v, std::size_t shape, std::size_t color, std::size_t size,
                   bool size_first) {
  const auto& a = size_first ? v.sizes[size] : v.colors[color];
  const auto& b = size_first ? v.colors[color] : v.sizes[size];
  return "a " + a + " " + b + " " + v.shapes[shape];
}

std::string caption(const AttributeVocabulary& v, const std::vector<Object>& objs, bool size_first) {
  std::string out;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (i) out += " and ";
    out += clause(v, objs[i].shape, objs[i].color, objs[i].size, size_first);
  }
  return out;
}

}  // namespace

Tensor CaptionExample::features() const {
  if (objects.empty()) throw ContextError("example '" + id + "' has no objects");
  const std::size_t d = objects.front().size();
  std::vector<double> data;
  data.reserve(objects.size() * d);
  for (const auto& o : objects) {
    if (o.size() != d) throw DimensionError("example '" + id + "': ragged feature vectors");
    data.insert(data.end(), o.begin(), o.end());
  }
  return Tensor({objects.size(), d}, std::move(data));
}

void CaptionExample::validate() const {
  if (objects.empty()) throw FormatError("example '" + id + "': no objects");
  if (refs.empty()) throw FormatError("example '" + id + "': no references");
  const std::size_t d = objects.front().size();
  for (const auto& o : objects) {
    if (o.size() != d) throw FormatError("example '" + id + "': feature vectors differ in width");
  }
}

const AttributeVocabulary& shapeworld_vocabulary() {
  static const AttributeVocabulary v{{"circle", "square", "triangle"}, {"red", "green", "blue"}, {"small", "large"}};
  return v;
}

const AttributeVocabulary& corpus_vocabulary() {
  static const AttributeVocabulary v{{"circle", "square", "triangle", "star", "hexagon", "diamond"},
                                     {"red", "green", "blue", "yellow", "purple", "orange"},
                                     {"small", "large", "tiny", "huge"}};
  return v;
}

std::vector<CaptionExample> gen_shapeworld(const ShapeWorldOptions& opts) {
  if (opts.n_examples == 0) throw ConfigError("gen_shapeworld: n_examples must be >= 1");
  if (opts.min_objects == 0 || opts.min_objects > opts.max_objects) {
    throw ConfigError("gen_shapeworld: object range must satisfy 1 <= min <= max");
  }
  const auto& v = shapeworld_vocabulary();
  std::mt19937_64 rng(opts.seed);
  std::vector<CaptionExample> out;
  out.reserve(opts.n_examples);
  for (std::size_t i = 0; i < opts.n_examples; ++i) {
    std::vector<Object> objs(draw(rng, opts.min_objects, opts.max_objects));
    for (auto& o : objs) {
      o.shape = draw(rng, 0, v.shapes.size() - 1);
      o.color = draw(rng, 0, v.colors.size() - 1);
      o.size = draw(rng, 0, v.sizes.size() - 1);
      o.x = draw_coord(rng);
      o.y = draw_coord(rng);
    }
    std::stable_sort(objs.begin(), objs.end(), [](const Object& a, const Object& b) { return a.x < b.x; });

    CaptionExample ex;
    ex.id = opts.id_prefix + "-" + std::to_string(i);
    for (const auto& o : objs) {
      std::vector<double> f(kShapeWorldFeatureDim, 0.0);
      f[o.shape] = 1.0;
      f[3 + o.color] = 1.0;
      f[6 + o.size] = 1.0;
      f[8] = o.x;
      f[9] = o.y;
      ex.objects.push_back(std::move(f));
    }
    ex.refs = {caption(v, objs, true), caption(v, objs, false)};
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::string> gen_text_corpus(std::size_t n_sentences, std::uint64_t seed, std::size_t min_clauses,
                                         std::size_t max_clauses) {
  if (n_sentences == 0) throw ConfigError("gen_text_corpus: n_sentences must be >= 1");
  if (min_clauses == 0 || min_clauses > max_clauses) {
    throw ConfigError("gen_text_corpus: clause range must satisfy 1 <= min <= max");
  }
  const auto& v = corpus_vocabulary();
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const std::size_t n = draw(rng, min_clauses, max_clauses);
    std::string s;
    for (std::size_t c = 0; c < n; ++c) {
      const auto shape = draw(rng, 0, v.shapes.size() - 1);
      const auto color = draw(rng, 0, v.colors.size() - 1);
      const auto size = draw(rng, 0, v.sizes.size() - 1);
      const bool size_first = draw(rng, 0, 1) == 0;
      if (c) s += " and ";
      s += clause(v, shape, color, size, size_first);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, std::string> shapeworld_token_classes() {
  std::map<std::string, std::string> m{{"a", "DET"}, {"and", "CONJ"}};
  const auto& v = corpus_vocabulary();
  for (const auto& w : v.shapes) m[w] = "NOUN";
  for (const auto& w : v.colors) m[w] = "ADJ";
  for (const auto& w : v.sizes) m[w] = "ADJ";
  return m;
}

std::string to_jsonl(const std::vector<CaptionExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["objects"] = ex.objects;
    j["refs"] = ex.refs;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CaptionExample> parse_jsonl(const std::string& text, const std::string& origin) {
  std::vector<CaptionExample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CaptionExample ex;
      ex.id = j.at("id").get<std::string>();
      ex.objects = j.at("objects").get<std::vector<std::vector<double>>>();
      ex.refs = j.at("refs").get<std::vector<std::string>>();
      ex.validate();
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<CaptionExample>& examples) {
  write_text_atomic(path, to_jsonl(examples));
}

std::vector<CaptionExample> load_dataset(const std::string& path) { return parse_jsonl(read_text_file(path), path); }

}  // namespace vgpt
