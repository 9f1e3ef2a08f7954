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
#include <cstddef>
#include <map>
#include <tuple>
#include <vector>

#include "attnoie/core.hpp"

namespace attnoie {

/// Symmetric association between two words: the larger of the two attention
/// directions, so causal (lower-triangular) exports work unchanged.
inline double association(const WordAttentionMatrix& matrix, std::size_t i,
                          std::size_t j) {
  if (i >= matrix.size() || j >= matrix.size())
    throw Error(ErrorCode::kIndexOutOfRange,
                "association(" + std::to_string(i) + "," + std::to_string(j) +
                    ") on a " + std::to_string(matrix.size()) + "-word matrix");
  return std::max(matrix(i, j), matrix(j, i));
}

enum class ActionKind { kStart, kYield, kStop };

/// Partial or complete path between the two arguments.
struct Candidate {
  std::vector<std::size_t> path;  // word indices in search order
  double total_score = 0.0;
  bool complete = false;
};

struct SearchStats {
  std::size_t expansions = 0;
  std::size_t steps = 0;
  std::size_t gap = 0;
};

namespace detail {

// Search runs in "position" space where the walk always moves rightward; for
// R2L the sentence is mirrored. Keeps tie-breaking and score summation order
// identical between a sentence and its reversal.
struct SearchFrame {
  std::size_t n = 0;
  bool mirrored = false;
  std::size_t to_word(std::size_t pos) const { return mirrored ? n - 1 - pos : pos; }
};

inline bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.total_score != b.total_score) return a.total_score > b.total_score;
  return a.path < b.path;  // positions, lexicographic
}

}  // namespace detail

/// Beam search over monotone paths from arg0 to arg1 for one argument pair.
///
/// The seed sits on arg0's boundary word nearest arg1. Each step expands every
/// active candidate either to a later gap word (yield) or straight to arg1's
/// near boundary word (stop); all expansions compete for the k beam slots by
/// raw score, and the selected complete ones leave the beam as results.
inline std::vector<Extraction> beam_search_pair(const SentenceBundle& bundle,
                                                const WordAttentionMatrix& matrix,
                                                const ChunkSpan& arg0,
                                                const ChunkSpan& arg1,
                                                const ExtractionConfig& config,
                                                SearchStats* stats = nullptr) {
  const std::size_t n = bundle.words.size();
  if (matrix.size() != n)
    throw Error(ErrorCode::kInvalidArgument,
                "matrix size " + std::to_string(matrix.size()) + " != word count " +
                    std::to_string(n) + " for '" + bundle.sentence_id + "'");
  if (arg0.start >= arg0.end || arg1.start >= arg1.end || arg0.end > n ||
      arg1.end > n)
    throw Error(ErrorCode::kInvalidArgument, "argument span outside sentence");

  Direction direction;
  if (arg0.end <= arg1.start) {
    direction = Direction::kLeftToRight;
  } else if (arg1.end <= arg0.start) {
    direction = Direction::kRightToLeft;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "argument spans overlap");
  }

  const detail::SearchFrame frame{n, direction == Direction::kRightToLeft};
  const std::size_t anchor = frame.mirrored ? n - 1 - arg0.start : arg0.end - 1;
  const std::size_t target = frame.mirrored ? n - 1 - (arg1.end - 1) : arg1.start;
  const std::size_t gap = target - anchor - 1;
  if (stats) *stats = SearchStats{0, 0, gap};

  std::vector<Extraction> out;
  if (gap > config.max_gap) return out;
  if (gap == 0 && !config.allow_empty_predicate) return out;

  auto score = [&](std::size_t from, std::size_t to) {
    return association(matrix, frame.to_word(from), frame.to_word(to));
  };

  std::vector<Candidate> beam{Candidate{{anchor}, 0.0, false}};  // start
  std::vector<Candidate> completed;
  std::vector<Candidate> pool;
  while (!beam.empty()) {
    pool.clear();
    for (const Candidate& c : beam) {
      const std::size_t last = c.path.back();
      for (std::size_t next = last + 1; next <= target; ++next) {
        Candidate grown = c;
        grown.path.push_back(next);
        grown.total_score = c.total_score + score(last, next);
        grown.complete = next == target;
        pool.push_back(std::move(grown));
      }
    }
    if (stats) {
      stats->expansions += pool.size();
      ++stats->steps;
    }
    const std::size_t keep = std::min(config.beam_size, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep),
                      pool.end(), detail::candidate_before);
    pool.resize(keep);
    beam.clear();
    for (Candidate& c : pool) {
      if (c.complete)
        completed.push_back(std::move(c));
      else
        beam.push_back(std::move(c));
    }
  }

  for (const Candidate& c : completed) {
    const std::size_t predicate_len = c.path.size() - 2;
    if (predicate_len == 0 && !config.allow_empty_predicate) continue;
    Extraction e;
    e.sentence_id = bundle.sentence_id;
    e.arg0 = arg0;
    e.arg1 = arg1;
    e.direction = direction;
    e.raw_score = c.total_score;
    e.norm_score = c.total_score / static_cast<double>(predicate_len + 1);
    for (std::size_t i = 1; i + 1 < c.path.size(); ++i) {
      const std::size_t w = frame.to_word(c.path[i]);
      e.predicate.push_back({w, bundle.words[w]});
      if (bundle.lemmas.size() == n) e.predicate_lemmas.push_back(bundle.lemmas[w]);
    }
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const Extraction& a, const Extraction& b) {
    return a.norm_score > b.norm_score;
  });
  return out;
}

/// Orders extractions of one sentence: best confidence first, then position.
inline bool extraction_order(const Extraction& a, const Extraction& b) {
  if (a.norm_score != b.norm_score) return a.norm_score > b.norm_score;
  const auto key = [](const Extraction& e) {
    return std::make_tuple(e.arg0.start, e.arg0.end, e.arg1.start, e.arg1.end,
                           e.predicate_indices());
  };
  return key(a) < key(b);
}

/// All triples of a sentence: every ordered chunk pair (only left-to-right
/// pairs unless bidirectional), deduplicated and thresholded on norm_score.
inline std::vector<Extraction> extract_sentence(const SentenceBundle& bundle,
                                                const WordAttentionMatrix& matrix,
                                                const ExtractionConfig& config) {
  std::vector<Extraction> out;
  const auto& chunks = bundle.np_chunks;
  if (chunks.size() < 2) return out;

  using Key = std::tuple<std::size_t, std::size_t, std::vector<std::size_t>,
                         std::size_t, std::size_t>;
  std::map<Key, Extraction> best;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    for (std::size_t j = 0; j < chunks.size(); ++j) {
      if (i == j) continue;
      if (!config.bidirectional && chunks[i].start > chunks[j].start) continue;
      for (Extraction& e : beam_search_pair(bundle, matrix, chunks[i], chunks[j], config)) {
        Key key{e.arg0.start, e.arg0.end, e.predicate_indices(), e.arg1.start,
                e.arg1.end};
        auto it = best.find(key);
        if (it == best.end())
          best.emplace(std::move(key), std::move(e));
        else if (e.norm_score > it->second.norm_score)
          it->second = std::move(e);
      }
    }
  }
  for (auto& [key, e] : best)
    if (e.norm_score >= config.score_threshold) out.push_back(std::move(e));
  std::sort(out.begin(), out.end(), extraction_order);
  return out;
}

}  // namespace attnoie
