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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "attnoie/core.hpp"
#include "attnoie/mapping.hpp"
#include "attnoie/matching.hpp"
#include "attnoie/text.hpp"

namespace attnoie {

struct EntityCandidate {
  std::string entity_id;
  double probability = 0.0;
  friend bool operator==(const EntityCandidate&, const EntityCandidate&) = default;
};

/// Case-folded surface mention -> candidates sorted by descending probability.
class MentionDictionary {
 public:
  void add(const std::string& mention, const std::string& entity_id, double probability) {
    if (!(probability > 0.0 && probability <= 1.0))
      throw Error(ErrorCode::kFormat, "probability of '" + mention + "' -> '" + entity_id +
                                          "' outside (0,1]");
    const std::string key = text::join(text::split_whitespace(text::fold(mention)));
    if (key.empty()) throw Error(ErrorCode::kFormat, "empty mention");
    auto& list = entries_[key];
    auto existing = std::find_if(list.begin(), list.end(), [&](const EntityCandidate& c) {
      return c.entity_id == entity_id;
    });
    if (existing != list.end())
      existing->probability = std::max(existing->probability, probability);
    else
      list.push_back({entity_id, probability});
    std::stable_sort(list.begin(), list.end(),
                     [](const EntityCandidate& a, const EntityCandidate& b) {
                       if (a.probability != b.probability) return a.probability > b.probability;
                       return a.entity_id < b.entity_id;
                     });
    max_words_ = std::max(max_words_, text::split_whitespace(key).size());
  }

  const std::vector<EntityCandidate>* find(const std::string& folded_mention) const {
    auto it = entries_.find(folded_mention);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(const std::string& folded_mention) const {
    return entries_.contains(folded_mention);
  }
  std::size_t max_mention_words() const noexcept { return max_words_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, std::vector<EntityCandidate>>& entries() const noexcept {
    return entries_;
  }

  friend bool operator==(const MentionDictionary& a, const MentionDictionary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::map<std::string, std::vector<EntityCandidate>> entries_;
  std::size_t max_words_ = 0;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

}  // namespace detail

/// `mention<TAB>entity_id<TAB>probability` per line.
inline MentionDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  MentionDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = detail::split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 3) throw Error(ErrorCode::kFormat, where + "expected 3 tab-separated fields");
    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, where + "bad probability '" + f[2] + "'");
    }
    try {
      dict.add(f[0], f[1], p);
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, where + e.what());
    }
  }
  return dict;
}

inline std::string dictionary_to_tsv(const MentionDictionary& dict) {
  std::string out;
  for (const auto& [mention, list] : dict.entries())
    for (const auto& c : list) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", c.probability);
      out += mention + "\t" + c.entity_id + "\t" + buf + "\n";
    }
  return out;
}

struct KGTriple {
  std::string subject;
  std::string predicate;
  std::string object;
  friend auto operator<=>(const KGTriple&, const KGTriple&) = default;
};

/// KG triples indexed by (subject, object).
class KGStore {
 public:
  void add(KGTriple t) {
    by_pair_[{t.subject, t.object}].insert(t.predicate);
    triples_.insert(std::move(t));
  }
  const std::set<std::string>* predicates(const std::string& subject,
                                          const std::string& object) const {
    auto it = by_pair_.find({subject, object});
    return it == by_pair_.end() ? nullptr : &it->second;
  }
  bool contains(const KGTriple& t) const { return triples_.contains(t); }
  const std::set<KGTriple>& triples() const noexcept { return triples_; }
  const PairPredicates& by_pair() const noexcept { return by_pair_; }
  std::size_t size() const noexcept { return triples_.size(); }

 private:
  std::set<KGTriple> triples_;
  PairPredicates by_pair_;
};

/// `subject<TAB>predicate<TAB>object` per line.
inline KGStore load_kg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  KGStore kg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = detail::split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": expected subject<TAB>predicate<TAB>object");
    kg.add({f[0], f[1], f[2]});
  }
  return kg;
}

inline const std::set<std::string>& default_pronouns() {
  static const std::set<std::string> kPronouns = {
      "i",    "me",    "my",   "mine",  "myself", "you",   "your",   "yours",
      "he",   "him",   "his",  "himself", "she",  "her",   "hers",   "herself",
      "it",   "its",   "itself", "we",  "us",     "our",   "ours",   "they",
      "them", "their", "theirs", "themselves", "this", "that", "these", "those",
      "who",  "whom",  "whose", "which"};
  return kPronouns;
}

struct LinkedMention {
  ChunkSpan span;
  std::string entity_id;
  double probability = 0.0;
  friend bool operator==(const LinkedMention&, const LinkedMention&) = default;
};

/// Greedy left-to-right longest-match lookup. Each hit links to its most
/// probable entity; lone pronouns are never linked.
inline std::vector<LinkedMention> link_mentions(
    const SentenceBundle& bundle, const MentionDictionary& dict,
    const std::set<std::string>& pronouns = default_pronouns()) {
  std::vector<LinkedMention> out;
  const auto& words = bundle.words;
  std::vector<std::string> folded;
  folded.reserve(words.size());
  for (const auto& w : words) folded.push_back(text::fold(w));

  std::size_t i = 0;
  while (i < words.size()) {
    const std::size_t longest = std::min(dict.max_mention_words(), words.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      if (len == 1 && pronouns.contains(folded[i])) break;
      std::string key = folded[i];
      for (std::size_t k = i + 1; k < i + len; ++k) key += " " + folded[k];
      const auto* candidates = dict.find(key);
      if (candidates == nullptr || candidates->empty()) continue;
      out.push_back({make_chunk(words, i, i + len), candidates->front().entity_id,
                     candidates->front().probability});
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return out;
}

/// Distant supervision: every ordered pair of distinct linked entities that
/// the KG relates yields one gold triple per predicate.
inline std::vector<GoldTriple> align_distant(const SentenceBundle& bundle,
                                             const std::vector<LinkedMention>& linked,
                                             const KGStore& kg) {
  std::vector<GoldTriple> out;
  for (std::size_t a = 0; a < linked.size(); ++a)
    for (std::size_t b = 0; b < linked.size(); ++b) {
      if (a == b || linked[a].entity_id == linked[b].entity_id) continue;
      const auto* preds = kg.predicates(linked[a].entity_id, linked[b].entity_id);
      if (preds == nullptr) continue;
      for (const std::string& predicate : *preds) {
        GoldTriple g;
        g.sentence_id = bundle.sentence_id;
        g.arg0 = {linked[a].span.surface,
                  std::make_pair(linked[a].span.start, linked[a].span.end), std::nullopt};
        g.predicate = {predicate, std::nullopt, std::nullopt};
        g.arg1 = {linked[b].span.surface,
                  std::make_pair(linked[b].span.start, linked[b].span.end), std::nullopt};
        out.push_back(std::move(g));
      }
    }
  return out;
}

/// Entity of an extraction argument: the longest linked mention inside the
/// chunk (leftmost on ties), if any.
inline const LinkedMention* argument_entity(const ChunkSpan& argument,
                                            const std::vector<LinkedMention>& linked) {
  const LinkedMention* best = nullptr;
  for (const LinkedMention& m : linked) {
    if (m.span.start < argument.start || m.span.end > argument.end) continue;
    if (best == nullptr || m.span.size() > best->span.size()) best = &m;
  }
  return best;
}

}  // namespace attnoie
