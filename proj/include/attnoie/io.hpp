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

// JSON/JSONL/TSV encodings of the domain types. Object keys are emitted in
// sorted order (nlohmann::json default), so outputs diff cleanly.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnoie/core.hpp"
#include "attnoie/matching.hpp"

namespace attnoie {

using json = nlohmann::json;

inline json chunk_to_json(const ChunkSpan& c) {
  return json{{"start", c.start}, {"end", c.end}, {"surface", c.surface}};
}

inline ChunkSpan chunk_from_json(const json& j) {
  return ChunkSpan{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>(),
                   j.at("surface").get<std::string>()};
}

inline json bundle_to_json(const SentenceBundle& b) {
  json j;
  j["sentence_id"] = b.sentence_id;
  j["words"] = b.words;
  json map = json::array();
  for (const auto& s : b.subword_map)
    map.push_back(json::array({s.word_index, s.subword_start, s.subword_count}));
  j["subword_map"] = std::move(map);
  json chunks = json::array();
  for (const auto& c : b.np_chunks) chunks.push_back(chunk_to_json(c));
  j["np_chunks"] = std::move(chunks);
  json ref{{"record", b.attention_ref.record}};
  if (!b.attention_ref.file.empty()) ref["file"] = b.attention_ref.file;
  j["attention_ref"] = std::move(ref);
  if (!b.lemmas.empty()) j["lemmas"] = b.lemmas;
  return j;
}

inline SentenceBundle bundle_from_json(const json& j) {
  SentenceBundle b;
  b.sentence_id = j.at("sentence_id").get<std::string>();
  b.words = j.at("words").get<std::vector<std::string>>();
  if (j.contains("subword_map"))
    for (const auto& e : j.at("subword_map")) {
      if (!e.is_array() || e.size() != 3)
        throw Error(ErrorCode::kFormat, "subword_map entries are [word, start, count]");
      b.subword_map.push_back(
          {e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::size_t>()});
    }
  if (j.contains("np_chunks"))
    for (const auto& c : j.at("np_chunks")) b.np_chunks.push_back(chunk_from_json(c));
  if (j.contains("attention_ref")) {
    const json& ref = j.at("attention_ref");
    if (ref.is_string()) {
      b.attention_ref.record = ref.get<std::string>();
    } else {
      b.attention_ref.record = ref.value("record", b.sentence_id);
      b.attention_ref.file = ref.value("file", std::string());
    }
  } else {
    b.attention_ref.record = b.sentence_id;
  }
  if (j.contains("lemmas")) b.lemmas = j.at("lemmas").get<std::vector<std::string>>();
  return b;
}

inline json extraction_to_json(const Extraction& e) {
  json j;
  j["sentence_id"] = e.sentence_id;
  j["arg0"] = chunk_to_json(e.arg0);
  j["arg1"] = chunk_to_json(e.arg1);
  json pred = json::array();
  for (const auto& p : e.predicate) pred.push_back(json{{"index", p.index}, {"word", p.word}});
  j["predicate"] = std::move(pred);
  j["predicate_text"] = e.predicate_text();
  j["raw_score"] = e.raw_score;
  j["norm_score"] = e.norm_score;
  j["direction"] = std::string(to_string(e.direction));
  if (!e.predicate_lemmas.empty()) j["predicate_lemmas"] = e.predicate_lemmas;
  return j;
}

inline Extraction extraction_from_json(const json& j) {
  Extraction e;
  e.sentence_id = j.at("sentence_id").get<std::string>();
  e.arg0 = chunk_from_json(j.at("arg0"));
  e.arg1 = chunk_from_json(j.at("arg1"));
  for (const auto& p : j.at("predicate"))
    e.predicate.push_back({p.at("index").get<std::size_t>(), p.at("word").get<std::string>()});
  e.raw_score = j.value("raw_score", 0.0);
  e.norm_score = j.value("norm_score", 0.0);
  const std::string dir = j.value("direction", std::string("L2R"));
  if (dir != "L2R" && dir != "R2L") throw Error(ErrorCode::kFormat, "bad direction '" + dir + "'");
  e.direction = dir == "L2R" ? Direction::kLeftToRight : Direction::kRightToLeft;
  if (j.contains("predicate_lemmas"))
    e.predicate_lemmas = j.at("predicate_lemmas").get<std::vector<std::string>>();
  return e;
}

namespace detail {

inline json gold_slot_to_json(const GoldSlot& s) {
  json j{{"surface", s.surface}};
  if (s.span) {
    j["start"] = s.span->first;
    j["end"] = s.span->second;
  }
  if (s.head) j["head"] = *s.head;
  return j;
}

inline GoldSlot gold_slot_from_json(const json& j) {
  GoldSlot s;
  s.surface = j.at("surface").get<std::string>();
  if (j.contains("start") != j.contains("end"))
    throw Error(ErrorCode::kFormat, "gold argument needs both start and end");
  if (j.contains("start"))
    s.span = std::make_pair(j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>());
  if (j.contains("head")) s.head = j.at("head").get<std::size_t>();
  if (s.span && s.span->first >= s.span->second)
    throw Error(ErrorCode::kFormat, "gold span is empty or inverted");
  if (s.span && s.head && (*s.head < s.span->first || *s.head >= s.span->second))
    throw Error(ErrorCode::kFormat, "gold head lies outside its span");
  return s;
}

}  // namespace detail

/// Factual-OIE gold line: {sentence_id, arg0{surface,start,end}, predicate_id, arg1{...}}.
inline json gold_to_json(const GoldTriple& g) {
  json j;
  j["sentence_id"] = g.sentence_id;
  j["arg0"] = detail::gold_slot_to_json(g.arg0);
  j["predicate_id"] = g.predicate.surface;
  j["arg1"] = detail::gold_slot_to_json(g.arg1);
  return j;
}

inline GoldTriple gold_from_json(const json& j) {
  GoldTriple g;
  g.sentence_id = j.at("sentence_id").get<std::string>();
  g.arg0 = detail::gold_slot_from_json(j.at("arg0"));
  g.arg1 = detail::gold_slot_from_json(j.at("arg1"));
  if (j.contains("predicate_id"))
    g.predicate.surface = j.at("predicate_id").get<std::string>();
  else if (j.contains("predicate") && j.at("predicate").is_object())
    g.predicate = detail::gold_slot_from_json(j.at("predicate"));
  else
    g.predicate.surface = j.at("predicate").get<std::string>();
  return g;
}

/// Calls `fn(json, line_no)` for each non-blank line; parse failures become
/// kFormat errors carrying file and line.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      fn(json::parse(line), line_no);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFormat) throw;
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::vector<SentenceBundle> read_bundles(const std::filesystem::path& path) {
  std::vector<SentenceBundle> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(bundle_from_json(j)); });
  return out;
}

inline std::vector<Extraction> read_extractions(const std::filesystem::path& path) {
  std::vector<Extraction> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(extraction_from_json(j)); });
  return out;
}

inline std::vector<GoldTriple> read_gold_jsonl(const std::filesystem::path& path) {
  std::vector<GoldTriple> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(gold_from_json(j)); });
  return out;
}

namespace detail {

inline std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

struct GoldTsvResult {
  std::vector<GoldTriple> triples;
  std::size_t truncated_rows = 0;  // rows that carried more than two arguments
};

/// Standard-OIE gold: `sentence_id, arg0, predicate, arg1` and optionally the
/// three head indices (arg0, predicate, arg1). Any further columns are extra
/// arguments; they are dropped and counted.
inline GoldTsvResult read_gold_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  GoldTsvResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (!f.back().empty() && f.back().back() == '\r') f.back().pop_back();
    if (f.size() < 4)
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": expected at least 4 columns");
    GoldTriple g;
    g.sentence_id = f[0];
    g.arg0.surface = f[1];
    g.predicate.surface = f[2];
    g.arg1.surface = f[3];
    std::size_t consumed = 4;
    if (f.size() >= 7) {
      auto h0 = detail::parse_index(f[4]);
      auto h1 = detail::parse_index(f[5]);
      auto h2 = detail::parse_index(f[6]);
      if (h0 && h1 && h2) {
        g.arg0.head = h0;
        g.predicate.head = h1;
        g.arg1.head = h2;
        consumed = 7;
      }
    }
    if (f.size() > consumed) ++result.truncated_rows;
    result.triples.push_back(std::move(g));
  }
  return result;
}

inline json report_to_json(const MatchReport& r, const AucResult* auc = nullptr) {
  json j{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  if (auc != nullptr) {
    j["auc"] = auc->auc;
    j["best_f1"] = auc->best_f1;
    json curve = json::array();
    for (const auto& p : auc->curve)
      curve.push_back(json{{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
    j["curve"] = std::move(curve);
  }
  return j;
}

}  // namespace attnoie
