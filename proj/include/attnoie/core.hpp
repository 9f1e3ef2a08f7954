/*
 * Copyright 2026 The attnoie Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "attnoie/error.hpp"
#include "attnoie/text.hpp"

namespace attnoie {

/// Half-open word range [start, end) plus its surface text.
struct ChunkSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  std::size_t size() const noexcept { return end > start ? end - start : 0; }
  bool contains(std::size_t index) const noexcept {
    return index >= start && index < end;
  }
  bool same_range(const ChunkSpan& other) const noexcept {
    return start == other.start && end == other.end;
  }
  friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

struct SubwordSpan {
  std::size_t word_index = 0;
  std::size_t subword_start = 0;
  std::size_t subword_count = 0;
  friend bool operator==(const SubwordSpan&, const SubwordSpan&) = default;
};

struct AttentionRef {
  std::string file;    // empty: resolved by the caller
  std::string record;  // sentence_id of the ATN1 record
  friend bool operator==(const AttentionRef&, const AttentionRef&) = default;
};

/// One NP-chunked sentence. Words are the unit of extraction; subwords only
/// matter when merging attention.
struct SentenceBundle {
  std::string sentence_id;
  std::vector<std::string> words;
  std::vector<SubwordSpan> subword_map;
  std::vector<ChunkSpan> np_chunks;
  AttentionRef attention_ref;
  std::vector<std::string> lemmas;  // optional, empty or one per word

  friend bool operator==(const SentenceBundle&, const SentenceBundle&) = default;
};

inline std::string join_words(const std::vector<std::string>& words,
                              std::size_t start, std::size_t end) {
  std::string out;
  for (std::size_t i = start; i < end && i < words.size(); ++i) {
    if (i > start) out += ' ';
    out += words[i];
  }
  return out;
}

inline ChunkSpan make_chunk(const std::vector<std::string>& words,
                            std::size_t start, std::size_t end) {
  return ChunkSpan{start, end, join_words(words, start, end)};
}

/// One subword per word.
inline std::vector<SubwordSpan> identity_subword_map(std::size_t n) {
  std::vector<SubwordSpan> map;
  map.reserve(n);
  for (std::size_t i = 0; i < n; ++i) map.push_back({i, i, 1});
  return map;
}

/// Dense square matrix of non-negative reals, row-major. The tag keeps
/// subword-level and word-level matrices from being mixed up.
template <class Tag>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}
  SquareMatrix(std::size_t n, std::vector<double> values)
      : n_(n), values_(std::move(values)) {
    if (values_.size() != n_ * n_)
      throw Error(ErrorCode::kInvalidArgument,
                  "matrix payload has " + std::to_string(values_.size()) +
                      " values, expected " + std::to_string(n_ * n_));
    for (double v : values_)
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorCode::kInvalidArgument,
                    "attention values must be finite and non-negative");
  }

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat;
    flat.reserve(rows.size() * rows.size());
    for (const auto& row : rows) {
      if (row.size() != rows.size())
        throw Error(ErrorCode::kInvalidArgument, "matrix is not square");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return SquareMatrix(rows.size(), std::move(flat));
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * n_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) noexcept {
    return values_[i * n_ + j];
  }
  const std::vector<double>& values() const noexcept { return values_; }

  SquareMatrix transposed() const {
    SquareMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

struct SubwordTag;
struct WordTag;
using SubwordMatrix = SquareMatrix<SubwordTag>;
using WordAttentionMatrix = SquareMatrix<WordTag>;

enum class Direction { kLeftToRight, kRightToLeft };

constexpr std::string_view to_string(Direction d) noexcept {
  return d == Direction::kLeftToRight ? "L2R" : "R2L";
}

struct PredicateWord {
  std::size_t index = 0;
  std::string word;
  friend bool operator==(const PredicateWord&, const PredicateWord&) = default;
};

/// (arg0; predicate; arg1) with its search provenance. Predicate words are in
/// search order: ascending indices for L2R, descending for R2L.
struct Extraction {
  std::string sentence_id;
  ChunkSpan arg0;
  std::vector<PredicateWord> predicate;
  ChunkSpan arg1;
  double raw_score = 0.0;
  double norm_score = 0.0;
  Direction direction = Direction::kLeftToRight;
  std::vector<std::string> predicate_lemmas;  // filled when the bundle has lemmas

  std::vector<std::string> predicate_words() const {
    std::vector<std::string> out;
    out.reserve(predicate.size());
    for (const auto& p : predicate) out.push_back(p.word);
    return out;
  }
  std::vector<std::size_t> predicate_indices() const {
    std::vector<std::size_t> out;
    out.reserve(predicate.size());
    for (const auto& p : predicate) out.push_back(p.index);
    return out;
  }
  std::string predicate_text() const { return text::join(predicate_words()); }

  friend bool operator==(const Extraction&, const Extraction&) = default;
};

enum class HeadReduction { kMean, kMax };
enum class LayerSelection { kLast, kMeanAll };

struct ExtractionConfig {
  std::size_t beam_size = 6;
  double score_threshold = 0.005;
  std::size_t min_predicate_frequency = 10;
  bool strict_frequency = false;  // count > min instead of count >= min
  HeadReduction head_reduction = HeadReduction::kMean;
  LayerSelection layer_selection = LayerSelection::kLast;
  bool bidirectional = true;
  bool allow_empty_predicate = false;
  std::size_t max_gap = 30;

  void validate() const {
    if (beam_size < 1)
      throw Error(ErrorCode::kInvalidArgument, "beam size must be >= 1");
    if (!(score_threshold >= 0.0) || !std::isfinite(score_threshold))
      throw Error(ErrorCode::kInvalidArgument, "score threshold must be >= 0");
    if (min_predicate_frequency < 1)
      throw Error(ErrorCode::kInvalidArgument,
                  "minimum predicate frequency must be >= 1");
  }
};

/// Lists every broken invariant of `bundle`. Never throws on content.
inline std::vector<std::string> validate_bundle(const SentenceBundle& bundle) {
  std::vector<std::string> violations;
  const std::size_t n = bundle.words.size();

  const ChunkSpan* prev = nullptr;
  for (std::size_t c = 0; c < bundle.np_chunks.size(); ++c) {
    const ChunkSpan& chunk = bundle.np_chunks[c];
    const std::string name = "chunk " + std::to_string(c) + " [" +
                             std::to_string(chunk.start) + "," +
                             std::to_string(chunk.end) + ")";
    if (chunk.start >= chunk.end) {
      violations.push_back(name + " is empty or inverted");
      continue;
    }
    if (chunk.end > n) {
      violations.push_back(name + " extends past word count " +
                           std::to_string(n));
      continue;
    }
    if (chunk.surface != join_words(bundle.words, chunk.start, chunk.end))
      violations.push_back(name + " surface does not match its words");
    if (prev != nullptr) {
      if (chunk.start < prev->start)
        violations.push_back(name + " is not sorted by start");
      else if (chunk.start < prev->end)
        violations.push_back(name + " overlaps the previous chunk");
    }
    prev = &chunk;
  }

  if (n > 0 && bundle.subword_map.empty())
    violations.push_back("subword_map is empty");
  std::vector<std::size_t> seen(n, 0);
  std::vector<SubwordSpan> by_start = bundle.subword_map;
  std::sort(by_start.begin(), by_start.end(),
            [](const SubwordSpan& a, const SubwordSpan& b) {
              return a.subword_start < b.subword_start;
            });
  std::size_t expected = 0;
  for (const SubwordSpan& s : by_start) {
    if (s.word_index >= n) {
      violations.push_back("subword_map entry for word " +
                           std::to_string(s.word_index) + " is out of range");
      continue;
    }
    ++seen[s.word_index];
    if (s.subword_count == 0)
      violations.push_back("word " + std::to_string(s.word_index) +
                           " has no subwords");
    if (s.subword_start != expected)
      violations.push_back("subword_map is not a contiguous partition at " +
                           std::to_string(s.subword_start));
    expected = s.subword_start + s.subword_count;
  }
  if (!bundle.subword_map.empty())
    for (std::size_t w = 0; w < n; ++w)
      if (seen[w] != 1)
        violations.push_back("word " + std::to_string(w) + " appears " +
                             std::to_string(seen[w]) +
                             " times in subword_map");

  if (!bundle.lemmas.empty() && bundle.lemmas.size() != n)
    violations.push_back("lemmas has " + std::to_string(bundle.lemmas.size()) +
                         " entries for " + std::to_string(n) + " words");
  return violations;
}

}  // namespace attnoie
