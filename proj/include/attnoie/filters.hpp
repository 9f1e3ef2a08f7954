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

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnoie/core.hpp"
#include "attnoie/text.hpp"

namespace attnoie {

/// Tokens removed from predicate phrases before counting or mapping.
struct StopLists {
  std::set<std::string> auxiliaries;
  std::set<std::string> adverbs;

  bool contains(const std::string& folded) const {
    return auxiliaries.contains(folded) || adverbs.contains(folded);
  }

  static StopLists defaults() {
    StopLists s;
    s.auxiliaries = {"am",    "is",    "are",   "was",   "were",  "be",
                     "been",  "being", "have",  "has",   "had",   "having",
                     "do",    "does",  "did",   "will",  "would", "shall",
                     "should", "may",  "might", "must",  "can",   "could"};
    s.adverbs = {"not",  "also",    "very",      "just",  "still", "already",
                 "often", "then",   "later",     "never", "always", "only",
                 "even", "really",  "recently",  "currently", "now", "once",
                 "soon", "formerly", "originally", "eventually"};
    return s;
  }
};

/// One token per line, '#' starts a comment. Tokens are case-folded.
inline std::set<std::string> load_token_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view token = text::trim(line);
    if (!token.empty()) out.insert(text::fold(token));
  }
  return out;
}

namespace detail {

inline bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

inline bool ascii_lower(std::string_view w) {
  for (char c : w)
    if (c < 'a' || c > 'z') return false;
  return !w.empty();
}

inline std::string undouble(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) &&
      stem[n - 1] != 'l' && stem[n - 1] != 's' && stem[n - 1] != 'z')
    stem.pop_back();
  return stem;
}

}  // namespace detail

/// Suffix-stripping lemmatizer for lowercase ASCII words: -ies/-ied -> y,
/// -sses -> ss, -(s|x|z|ch|sh)es -> stem, -s, -ed, -ing. Words with a stem
/// shorter than three letters and listed irregulars are left alone. Not a
/// real morphological analyzer; identical inputs always normalize alike.
inline std::string strip_suffix(const std::string& word) {
  static const std::map<std::string, std::string, std::less<>> kIrregular = {
      {"born", "born"},   {"began", "begin"}, {"begun", "begin"},
      {"became", "become"}, {"won", "win"},   {"led", "lead"},
      {"made", "make"},   {"wrote", "write"}, {"written", "write"},
      {"gave", "give"},   {"given", "give"},  {"took", "take"},
      {"taken", "take"},  {"left", "leave"},  {"went", "go"},
      {"gone", "go"},     {"held", "hold"},   {"known", "know"},
      {"knew", "know"},   {"grew", "grow"},   {"grown", "grow"},
      {"died", "die"},    {"lies", "lie"},    {"lied", "lie"},
      {"sang", "sing"},   {"sung", "sing"},   {"built", "build"},
      {"taught", "teach"}, {"bought", "buy"}, {"brought", "bring"},
      {"founded", "found"}, {"news", "news"}, {"series", "series"},
      {"species", "species"}, {"its", "its"}, {"this", "this"},
      {"thus", "thus"},   {"us", "us"},       {"as", "as"},
      {"during", "during"}, {"bring", "bring"}, {"king", "king"},
      {"thing", "thing"}, {"string", "string"}, {"spring", "spring"},
      {"ring", "ring"},   {"wing", "wing"},   {"sing", "sing"},
      {"red", "red"},     {"bed", "bed"},     {"need", "need"},
      {"feed", "feed"},   {"seed", "seed"},   {"speed", "speed"},
      {"hundred", "hundred"}};
  if (auto it = kIrregular.find(word); it != kIrregular.end()) return it->second;
  if (!detail::ascii_lower(word)) return word;

  auto ends_with = [&](std::string_view suffix) {
    return word.size() >= suffix.size() &&
           std::string_view(word).substr(word.size() - suffix.size()) == suffix;
  };
  auto stem_of = [&](std::size_t cut) { return word.substr(0, word.size() - cut); };

  if (ends_with("ies") && word.size() > 4) return stem_of(3) + "y";
  if (ends_with("ied") && word.size() > 4) return stem_of(3) + "y";
  if (ends_with("sses")) return stem_of(2);
  if (ends_with("ss") || ends_with("us") || ends_with("is")) return word;
  if (ends_with("es") && word.size() > 4) {
    const std::string stem = stem_of(2);
    if (stem.ends_with("s") || stem.ends_with("x") || stem.ends_with("z") ||
        stem.ends_with("ch") || stem.ends_with("sh"))
      return stem;
  }
  if (ends_with("s") && word.size() > 3) return stem_of(1);
  if (ends_with("ed") && word.size() > 4) return detail::undouble(stem_of(2));
  if (ends_with("ing") && word.size() > 5) return detail::undouble(stem_of(3));
  return word;
}

/// Lowercase, drop stop-listed tokens, strip suffixes, join with spaces.
/// When `lemmas` has one entry per word they replace suffix stripping.
inline std::string normalize_predicate(std::span<const std::string> words,
                                       const StopLists& stops,
                                       std::span<const std::string> lemmas = {}) {
  const bool use_lemmas = !lemmas.empty() && lemmas.size() == words.size();
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (const std::string& token : text::split_whitespace(words[i])) {
      const std::string folded = text::fold(token);
      if (stops.contains(folded)) continue;
      if (use_lemmas) {
        const std::string lemma = text::fold(lemmas[i]);
        if (!stops.contains(lemma)) kept.push_back(lemma);
      } else {
        kept.push_back(strip_suffix(folded));
      }
    }
  }
  return text::join(kept);
}

inline std::string normalize_predicate(const Extraction& e, const StopLists& stops) {
  const auto words = e.predicate_words();
  return normalize_predicate(words, stops, e.predicate_lemmas);
}

/// Normalized predicate phrase -> corpus occurrence count.
struct PredicateStats {
  std::map<std::string, std::size_t> counts;

  std::size_t count(const std::string& phrase) const {
    auto it = counts.find(phrase);
    return it == counts.end() ? 0 : it->second;
  }
  void merge(const PredicateStats& other) {
    for (const auto& [phrase, c] : other.counts) counts[phrase] += c;
  }
};

inline PredicateStats count_predicates(std::span<const Extraction> extractions,
                                       const StopLists& stops) {
  PredicateStats stats;
  for (const Extraction& e : extractions) ++stats.counts[normalize_predicate(e, stops)];
  return stats;
}

/// Keeps extractions whose normalized predicate occurs at least `min_count`
/// times across `extractions` (strictly more when `strict`).
inline std::vector<Extraction> filter_by_frequency(std::span<const Extraction> extractions,
                                                   std::size_t min_count,
                                                   const StopLists& stops,
                                                   bool strict = false) {
  const PredicateStats stats = count_predicates(extractions, stops);
  std::vector<Extraction> out;
  for (const Extraction& e : extractions) {
    const std::size_t c = stats.count(normalize_predicate(e, stops));
    if (strict ? c > min_count : c >= min_count) out.push_back(e);
  }
  return out;
}

/// True iff the predicate occupies consecutive sentence positions.
inline bool check_contiguity(const Extraction& extraction, const SentenceBundle& bundle) {
  const auto idx = extraction.predicate_indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= bundle.words.size()) return false;
    if (i == 0) continue;
    const std::size_t step = idx[i] > idx[i - 1] ? idx[i] - idx[i - 1] : idx[i - 1] - idx[i];
    if (step != 1) return false;
  }
  return true;
}

}  // namespace attnoie
