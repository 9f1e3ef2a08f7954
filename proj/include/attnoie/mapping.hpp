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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "attnoie/core.hpp"
#include "attnoie/filters.hpp"

namespace attnoie {

enum class Provenance { kManual, kBootstrapped };

constexpr std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::kManual ? "manual" : "bootstrapped";
}

/// Many-to-many dictionary from normalized OIE relation phrases to KG
/// predicate ids. A pair is stored once; manual provenance wins over
/// bootstrapped when both are added.
class PredicateMapping {
 public:
  using Key = std::pair<std::string, std::string>;  // (phrase, kg_predicate)

  void add(const std::string& phrase, const std::string& kg_predicate, Provenance p) {
    auto [it, inserted] = entries_.try_emplace(Key{phrase, kg_predicate}, p);
    if (!inserted && p == Provenance::kManual) it->second = p;
  }

  /// Normalizes `words` before inserting.
  void add_phrase(const std::string& raw_phrase, const std::string& kg_predicate,
                  Provenance p, const StopLists& stops) {
    const auto words = text::split_whitespace(raw_phrase);
    add(normalize_predicate(words, stops), kg_predicate, p);
  }

  bool contains(const std::string& phrase, const std::string& kg_predicate) const {
    return entries_.contains(Key{phrase, kg_predicate});
  }
  void erase(const std::string& phrase, const std::string& kg_predicate) {
    entries_.erase(Key{phrase, kg_predicate});
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<Key, Provenance>& entries() const noexcept { return entries_; }

  bool includes(const PredicateMapping& other) const {
    for (const auto& [key, prov] : other.entries_)
      if (!entries_.contains(key)) return false;
    return true;
  }

  friend bool operator==(const PredicateMapping&, const PredicateMapping&) = default;

 private:
  std::map<Key, Provenance> entries_;
};

/// Joint and marginal counts of (phrase, kg_predicate) co-occurrence.
class CooccurrenceTable {
 public:
  using Key = std::pair<std::string, std::string>;

  void add(const std::string& phrase, const std::string& kg_predicate,
           std::uint64_t count = 1) {
    if (count == 0) return;
    joint_[Key{phrase, kg_predicate}] += count;
    phrase_marginal_[phrase] += count;
    predicate_marginal_[kg_predicate] += count;
    total_ += count;
  }

  std::uint64_t joint(const std::string& phrase, const std::string& kg_predicate) const {
    auto it = joint_.find(Key{phrase, kg_predicate});
    return it == joint_.end() ? 0 : it->second;
  }
  std::uint64_t phrase_marginal(const std::string& phrase) const {
    auto it = phrase_marginal_.find(phrase);
    return it == phrase_marginal_.end() ? 0 : it->second;
  }
  std::uint64_t predicate_marginal(const std::string& kg_predicate) const {
    auto it = predicate_marginal_.find(kg_predicate);
    return it == predicate_marginal_.end() ? 0 : it->second;
  }
  std::uint64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return joint_.empty(); }
  const std::map<Key, std::uint64_t>& cells() const noexcept { return joint_; }

  void merge(const CooccurrenceTable& other) {
    for (const auto& [key, c] : other.joint_) add(key.first, key.second, c);
  }

  /// Marginals equal the row/column sums of the joint counts.
  bool marginals_consistent() const {
    std::map<std::string, std::uint64_t> rows, cols;
    std::uint64_t total = 0;
    for (const auto& [key, c] : joint_) {
      rows[key.first] += c;
      cols[key.second] += c;
      total += c;
    }
    return rows == phrase_marginal_ && cols == predicate_marginal_ && total == total_;
  }

 private:
  std::map<Key, std::uint64_t> joint_;
  std::map<std::string, std::uint64_t> phrase_marginal_;
  std::map<std::string, std::uint64_t> predicate_marginal_;
  std::uint64_t total_ = 0;
};

using EntityPair = std::pair<std::string, std::string>;
using PairPredicates = std::map<EntityPair, std::set<std::string>>;

/// An OIE relation observed between two linked entities.
struct PhraseObservation {
  EntityPair entities;
  std::string phrase;  // already normalized
};

/// One joint count per (observation, KG predicate) whose entity pair is
/// shared with the KG side.
inline CooccurrenceTable accumulate_cooccurrence(std::span<const PhraseObservation> observations,
                                                 const PairPredicates& kg_by_pair) {
  CooccurrenceTable table;
  for (const PhraseObservation& obs : observations) {
    auto it = kg_by_pair.find(obs.entities);
    if (it == kg_by_pair.end()) continue;
    for (const std::string& predicate : it->second) table.add(obs.phrase, predicate);
  }
  if (!table.marginals_consistent())
    throw Error(ErrorCode::kInvariant, "co-occurrence marginals drifted from joint counts");
  return table;
}

/// log(p(x,y)^2 / (p(x) p(y))), natural log.
inline double pmi2(const CooccurrenceTable& table, const std::string& phrase,
                   const std::string& kg_predicate) {
  const std::uint64_t joint = table.joint(phrase, kg_predicate);
  if (joint == 0)
    throw Error(ErrorCode::kZeroJoint,
                "no co-occurrence of '" + phrase + "' with '" + kg_predicate + "'");
  const double n = static_cast<double>(table.total());
  const double pxy = static_cast<double>(joint) / n;
  const double px = static_cast<double>(table.phrase_marginal(phrase)) / n;
  const double py = static_cast<double>(table.predicate_marginal(kg_predicate)) / n;
  return std::log(pxy * pxy / (px * py));
}

/// Reject-list entries are (phrase, kg_predicate) pairs removed after the
/// bootstrap, seed entries included.
using RejectList = std::set<std::pair<std::string, std::string>>;

inline PredicateMapping bootstrap_mapping(const CooccurrenceTable& table,
                                          const PredicateMapping& seed,
                                          double pmi_threshold,
                                          const RejectList& reject = {}) {
  PredicateMapping out = seed;
  for (const auto& [key, count] : table.cells())
    if (pmi2(table, key.first, key.second) >= pmi_threshold)
      out.add(key.first, key.second, Provenance::kBootstrapped);
  for (const auto& [phrase, predicate] : reject) out.erase(phrase, predicate);
  return out;
}

// ---------------------------------------------------------------------------
// Files

/// {"phrase": ..., "predicate": ..., "provenance": "manual"|"bootstrapped"}
/// per line. Phrases are re-normalized on load.
inline PredicateMapping load_mapping(const std::filesystem::path& path,
                                     const StopLists& stops = StopLists::defaults()) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  PredicateMapping mapping;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string prov = j.value("provenance", std::string("manual"));
      if (prov != "manual" && prov != "bootstrapped")
        throw Error(ErrorCode::kFormat, "unknown provenance '" + prov + "'");
      mapping.add_phrase(j.at("phrase").get<std::string>(),
                         j.at("predicate").get<std::string>(),
                         prov == "manual" ? Provenance::kManual : Provenance::kBootstrapped,
                         stops);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return mapping;
}

inline std::string mapping_to_jsonl(const PredicateMapping& mapping) {
  std::string out;
  for (const auto& [key, prov] : mapping.entries()) {
    nlohmann::json j;
    j["phrase"] = key.first;
    j["predicate"] = key.second;
    j["provenance"] = std::string(to_string(prov));
    out += j.dump() + "\n";
  }
  return out;
}

/// `phrase<TAB>predicate` per line, '#' comments. Phrases are normalized.
inline RejectList load_reject_list(const std::filesystem::path& path,
                                   const StopLists& stops = StopLists::defaults()) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  RejectList out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": expected phrase<TAB>predicate");
    const auto words = text::split_whitespace(line.substr(0, tab));
    out.emplace(normalize_predicate(words, stops),
                std::string(text::trim(std::string_view(line).substr(tab + 1))));
  }
  return out;
}

}  // namespace attnoie
