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
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "attnoie/core.hpp"
#include "attnoie/filters.hpp"
#include "attnoie/mapping.hpp"
#include "attnoie/text.hpp"

namespace attnoie {

/// One slot of a gold triple. Span and head are optional depending on the
/// dataset; the predicate slot of a factual gold holds a KG predicate id.
struct GoldSlot {
  std::string surface;
  std::optional<std::pair<std::size_t, std::size_t>> span;  // [start, end)
  std::optional<std::size_t> head;
  friend bool operator==(const GoldSlot&, const GoldSlot&) = default;
};

struct GoldTriple {
  std::string sentence_id;
  GoldSlot arg0;
  GoldSlot predicate;
  GoldSlot arg1;

  bool has_heads() const {
    return arg0.head.has_value() && predicate.head.has_value() && arg1.head.has_value();
  }
  bool has_argument_spans() const {
    return arg0.span.has_value() && arg1.span.has_value();
  }
  friend bool operator==(const GoldTriple&, const GoldTriple&) = default;
};

enum class MatchRegime { kLexical, kTuple, kExact };

struct TupleCredit {
  double precision = 0.0;
  double recall = 0.0;
  double f1() const {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
};

struct MatchedPair {
  std::size_t prediction = 0;
  std::size_t gold = 0;
  TupleCredit credit;  // (1,1) for boolean regimes
};

struct MatchReport {
  std::vector<MatchedPair> matched_pairs;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct AucResult {
  double auc = 0.0;
  double best_f1 = 0.0;
  std::vector<PRPoint> curve;
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// ---------------------------------------------------------------------------
// Slot-level matchers

/// Every slot of the prediction covers the corresponding gold head index.
inline bool lexical_match(const Extraction& pred, const GoldTriple& gold) {
  if (!gold.has_heads())
    throw Error(ErrorCode::kMissingHead,
                "gold triple in '" + gold.sentence_id + "' lacks head indices");
  if (!pred.arg0.contains(*gold.arg0.head) || !pred.arg1.contains(*gold.arg1.head))
    return false;
  const auto idx = pred.predicate_indices();
  return std::find(idx.begin(), idx.end(), *gold.predicate.head) != idx.end();
}

namespace detail {

inline TupleCredit slot_credit(const std::string& predicted, const std::string& gold) {
  std::vector<std::string> p = text::split_whitespace(text::fold(predicted));
  std::vector<std::string> g = text::split_whitespace(text::fold(gold));
  if (p.empty() && g.empty()) return {1.0, 1.0};
  if (p.empty() || g.empty()) return {0.0, 0.0};
  std::map<std::string, std::size_t> bag;
  for (const auto& t : g) ++bag[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return {static_cast<double>(common) / static_cast<double>(p.size()),
          static_cast<double>(common) / static_cast<double>(g.size())};
}

}  // namespace detail

/// Token-overlap credit averaged over the three slots. Long predicted slots
/// lose precision; short ones lose recall.
inline TupleCredit tuple_match(const Extraction& pred, const GoldTriple& gold) {
  const TupleCredit a0 = detail::slot_credit(pred.arg0.surface, gold.arg0.surface);
  const TupleCredit pr = detail::slot_credit(pred.predicate_text(), gold.predicate.surface);
  const TupleCredit a1 = detail::slot_credit(pred.arg1.surface, gold.arg1.surface);
  return {(a0.precision + pr.precision + a1.precision) / 3.0,
          (a0.recall + pr.recall + a1.recall) / 3.0};
}

/// Arguments agree on surface (case-insensitive) and exact span, and the
/// normalized predicate is mapped to the gold KG predicate.
inline bool exact_match(const Extraction& pred, const GoldTriple& gold,
                        const PredicateMapping& mapping,
                        const StopLists& stops = StopLists::defaults()) {
  if (!gold.has_argument_spans()) return false;
  auto slot_ok = [](const ChunkSpan& p, const GoldSlot& g) {
    return p.start == g.span->first && p.end == g.span->second &&
           text::equals_folded(p.surface, g.surface);
  };
  if (!slot_ok(pred.arg0, gold.arg0) || !slot_ok(pred.arg1, gold.arg1)) return false;
  return mapping.contains(normalize_predicate(pred, stops), gold.predicate.surface);
}

// ---------------------------------------------------------------------------
// One-to-one assignment

namespace detail {

// Maximum bipartite matching (augmenting paths). Visits predictions and
// golds in index order so the assignment is deterministic.
class BipartiteMatcher {
 public:
  explicit BipartiteMatcher(const std::vector<std::vector<std::size_t>>& adjacency,
                            std::size_t gold_count)
      : adj_(adjacency), gold_owner_(gold_count, kFree) {}

  std::vector<std::pair<std::size_t, std::size_t>> run() {
    for (std::size_t p = 0; p < adj_.size(); ++p) {
      visited_.assign(gold_owner_.size(), false);
      augment(p);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t g = 0; g < gold_owner_.size(); ++g)
      if (gold_owner_[g] != kFree) pairs.emplace_back(gold_owner_[g], g);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
  }

 private:
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  bool augment(std::size_t p) {
    for (std::size_t g : adj_[p]) {
      if (visited_[g]) continue;
      visited_[g] = true;
      if (gold_owner_[g] == kFree || augment(gold_owner_[g])) {
        gold_owner_[g] = p;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<std::size_t>>& adj_;
  std::vector<std::size_t> gold_owner_;
  std::vector<bool> visited_;
};

template <class T>
std::map<std::string, std::vector<std::size_t>> group_by_sentence(std::span<const T> items) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) groups[items[i].sentence_id].push_back(i);
  return groups;
}

}  // namespace detail

inline void check_regime_fields(std::span<const GoldTriple> golds, MatchRegime regime,
                                const PredicateMapping* mapping) {
  if (regime == MatchRegime::kExact && mapping == nullptr)
    throw Error(ErrorCode::kRegimeFieldMissing, "exact regime needs a predicate mapping");
  for (const GoldTriple& g : golds) {
    if (regime == MatchRegime::kLexical && !g.has_heads())
      throw Error(ErrorCode::kRegimeFieldMissing,
                  "lexical regime needs head indices (sentence '" + g.sentence_id + "')");
    if (regime == MatchRegime::kExact && !g.has_argument_spans())
      throw Error(ErrorCode::kRegimeFieldMissing,
                  "exact regime needs argument spans (sentence '" + g.sentence_id + "')");
  }
}

/// Corpus P/R/F1 under one matching regime. Predictions and golds only pair
/// within the same sentence and each is used at most once: boolean regimes
/// take a maximum matching, tuple takes greedy pairs by descending F1 credit.
/// With no predictions P is 1; with no golds R is 1.
inline MatchReport score_corpus(std::span<const Extraction> preds,
                                std::span<const GoldTriple> golds, MatchRegime regime,
                                const PredicateMapping* mapping = nullptr,
                                const StopLists& stops = StopLists::defaults()) {
  check_regime_fields(golds, regime, mapping);
  const auto pred_groups = detail::group_by_sentence(preds);
  const auto gold_groups = detail::group_by_sentence(golds);

  MatchReport report;
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (const auto& [sentence, pidx] : pred_groups) {
    auto git = gold_groups.find(sentence);
    if (git == gold_groups.end()) continue;
    const std::vector<std::size_t>& gidx = git->second;

    if (regime == MatchRegime::kTuple) {
      struct Scored {
        double f1;
        std::size_t p, g;
        TupleCredit credit;
      };
      std::vector<Scored> cells;
      for (std::size_t a = 0; a < pidx.size(); ++a)
        for (std::size_t b = 0; b < gidx.size(); ++b) {
          const TupleCredit c = tuple_match(preds[pidx[a]], golds[gidx[b]]);
          if (c.f1() > 0.0) cells.push_back({c.f1(), pidx[a], gidx[b], c});
        }
      std::stable_sort(cells.begin(), cells.end(), [](const Scored& x, const Scored& y) {
        if (x.f1 != y.f1) return x.f1 > y.f1;
        return std::tie(x.p, x.g) < std::tie(y.p, y.g);
      });
      std::map<std::size_t, bool> used_p, used_g;
      for (const Scored& s : cells) {
        if (used_p[s.p] || used_g[s.g]) continue;
        used_p[s.p] = used_g[s.g] = true;
        report.matched_pairs.push_back({s.p, s.g, s.credit});
        precision_sum += s.credit.precision;
        recall_sum += s.credit.recall;
      }
    } else {
      std::vector<std::vector<std::size_t>> adjacency(pidx.size());
      for (std::size_t a = 0; a < pidx.size(); ++a)
        for (std::size_t b = 0; b < gidx.size(); ++b) {
          const Extraction& p = preds[pidx[a]];
          const GoldTriple& g = golds[gidx[b]];
          const bool ok = regime == MatchRegime::kLexical ? lexical_match(p, g)
                                                          : exact_match(p, g, *mapping, stops);
          if (ok) adjacency[a].push_back(b);
        }
      for (auto [a, b] : detail::BipartiteMatcher(adjacency, gidx.size()).run()) {
        report.matched_pairs.push_back({pidx[a], gidx[b], {1.0, 1.0}});
        precision_sum += 1.0;
        recall_sum += 1.0;
      }
    }
  }
  std::sort(report.matched_pairs.begin(), report.matched_pairs.end(),
            [](const MatchedPair& x, const MatchedPair& y) {
              return std::tie(x.prediction, x.gold) < std::tie(y.prediction, y.gold);
            });
  report.precision = preds.empty() ? 1.0 : precision_sum / static_cast<double>(preds.size());
  report.recall = golds.empty() ? 1.0 : recall_sum / static_cast<double>(golds.size());
  report.f1 = f1_score(report.precision, report.recall);
  return report;
}

/// Trapezoidal area under a PR curve, sorted by recall and closed at recall
/// 0 with the precision of the highest-threshold point.
inline double trapezoid_auc(std::span<const PRPoint> curve) {
  if (curve.empty()) return 0.0;
  std::vector<PRPoint> pts(curve.begin(), curve.end());
  const double closing_precision =
      std::max_element(pts.begin(), pts.end(), [](const PRPoint& a, const PRPoint& b) {
        return a.threshold < b.threshold;
      })->precision;
  std::stable_sort(pts.begin(), pts.end(), [](const PRPoint& a, const PRPoint& b) {
    if (a.recall != b.recall) return a.recall < b.recall;
    return a.threshold > b.threshold;
  });
  double area = 0.0;
  double prev_r = 0.0;
  double prev_p = closing_precision;
  for (const PRPoint& p : pts) {
    area += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
    prev_r = p.recall;
    prev_p = p.precision;
  }
  return area;
}

/// Sweeps every distinct norm_score as a confidence threshold.
inline AucResult auc_and_best_f1(std::span<const Extraction> preds,
                                 std::span<const GoldTriple> golds, MatchRegime regime,
                                 const PredicateMapping* mapping = nullptr,
                                 const StopLists& stops = StopLists::defaults()) {
  check_regime_fields(golds, regime, mapping);
  std::vector<double> thresholds;
  for (const Extraction& e : preds) {
    if (!std::isfinite(e.norm_score))
      throw Error(ErrorCode::kInvalidArgument, "prediction score is not finite");
    thresholds.push_back(e.norm_score);
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  AucResult result;
  for (double t : thresholds) {
    std::vector<Extraction> kept;
    for (const Extraction& e : preds)
      if (e.norm_score >= t) kept.push_back(e);
    const MatchReport r = score_corpus(kept, golds, regime, mapping, stops);
    result.curve.push_back({t, r.precision, r.recall});
    result.best_f1 = std::max(result.best_f1, r.f1);
  }
  result.auc = trapezoid_auc(result.curve);
  return result;
}

}  // namespace attnoie
