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

// Acceptance gate. Each criterion prints one PASS/FAIL line; the process
// exits non-zero if any fails. Runs without gtest so it can be invoked
// directly as `attnoie_acceptance`.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attnoie/attnoie.hpp"
#include "attnoie/io.hpp"
#include "oracles.hpp"

namespace {

using namespace attnoie;

const std::string kFixtures = ATTNOIE_FIXTURES;

// A criterion returns an empty string on success, otherwise the first
// violation it found.
struct Criterion {
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<std::string()> check;
};

GoldTriple surface_gold(std::string sid, std::string a0, std::string p, std::string a1) {
  GoldTriple g;
  g.sentence_id = std::move(sid);
  g.arg0.surface = std::move(a0);
  g.predicate.surface = std::move(p);
  g.arg1.surface = std::move(a1);
  return g;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

std::string golden_extraction() {
  const auto b = oracle::bundle_with_chunks("dylan", {"Dylan", "was", "born", "in", "Minnesota"},
                                            {{0, 1}, {4, 5}});
  WordAttentionMatrix m(5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) m(i, j) = 0.05;
  m(2, 0) = 0.2;
  m(3, 2) = 0.3;
  m(4, 3) = 0.2;
  ExtractionConfig c;
  c.beam_size = 1;
  const auto out = beam_search_pair(b, m, b.np_chunks[0], b.np_chunks[1], c);
  if (out.size() != 1) return "expected one extraction, got " + std::to_string(out.size());
  const Extraction& e = out.front();
  if (e.arg0.surface != "Dylan" || e.predicate_text() != "born in" || e.arg1.surface != "Minnesota")
    return "got (" + e.arg0.surface + "; " + e.predicate_text() + "; " + e.arg1.surface + ")";
  if (std::abs(e.raw_score - 0.7) > 1e-9) return "raw_score " + fmt(e.raw_score);

  // Same sentence through the committed ATN1 fixture (float32 payload).
  const auto bundles = read_bundles(kFixtures + "/dylan_bundles.jsonl");
  const AttentionTensor t = read_record(kFixtures + "/dylan.atn", "dylan");
  const auto fm = word_attention(t, bundles.front(), c);
  const auto fout = beam_search_pair(bundles.front(), fm, bundles.front().np_chunks[0],
                                     bundles.front().np_chunks[1], c);
  if (fout.size() != 1 || fout.front().predicate_text() != "born in")
    return "fixture file does not reproduce the single extraction";
  return {};
}

std::string oracle_equivalence() {
  std::mt19937_64 rng(599);
  std::size_t compared = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 7;
    const auto words = oracle::word_list(n);
    const auto rows = oracle::random_matrix(n, rng);
    const auto [a0, a1] = oracle::random_chunk_pair(words, rng);
    const auto b = oracle::bundle_with_chunks("s", words, {});
    ExtractionConfig c;
    c.beam_size = 64;
    const auto out = beam_search_pair(b, WordAttentionMatrix::from_rows(rows), a0, a1, c);
    const oracle::BestPath best = oracle::exhaustive_best(rows, a0, a1);
    if (out.empty() != !best.found) return "case " + std::to_string(t) + ": existence differs";
    if (out.empty()) continue;
    double top = -1;
    for (const auto& e : out) top = std::max(top, e.norm_score);
    if (top != best.norm_score)
      return "case " + std::to_string(t) + ": beam " + fmt(top) + " vs exhaustive " +
             fmt(best.norm_score);
    ++compared;
  }
  if (compared < 250) return "only " + std::to_string(compared) + " cases had a path";
  return {};
}

std::string metric_identities() {
  // Hand-derived tuple credit.
  const std::vector<std::string> w = {"Dylan", "was", "born", "in", "Minnesota"};
  Extraction e;
  e.sentence_id = "s";
  e.arg0 = make_chunk(w, 0, 1);
  e.arg1 = make_chunk(w, 4, 5);
  e.predicate = {{2, "born"}, {3, "in"}};
  GoldTriple g;
  g.sentence_id = "s";
  g.arg0.surface = "Dylan";
  g.predicate.surface = "was born in";
  g.arg1.surface = "Minnesota";
  TupleCredit c = tuple_match(e, g);
  if (std::abs(c.precision - 1.0) > 1e-12 || std::abs(c.recall - 8.0 / 9.0) > 1e-12)
    return "tuple credit (" + fmt(c.precision) + ", " + fmt(c.recall) + "), expected (1, 8/9)";
  c = tuple_match(e, surface_gold("s", "Dylan", "born in", "Minnesota"));
  if (c.precision != 1.0 || c.recall != 1.0) return "identical triple not credited (1, 1)";
  c = tuple_match(e, surface_gold("s", "Bob", "lives at", "Duluth"));
  if (c.precision != 0.0 || c.recall != 0.0) return "disjoint triple not credited (0, 0)";

  // Exact match against the brute-force scorer.
  const StopLists stops = StopLists::defaults();
  const std::vector<std::vector<std::string>> phrases = {
      {"born", "in"}, {"was", "born", "in"}, {"founded"}, {"in"}, {"founded", "by"}};
  const std::vector<std::string> kg_preds = {"per:city_of_birth", "org:founded_by", "per:origin"};
  const std::vector<std::string> sw = oracle::word_list(6);
  std::mt19937_64 rng(600);
  std::size_t total_matched = 0;
  for (int t = 0; t < 200; ++t) {
    PredicateMapping mapping;
    std::map<std::pair<std::string, std::string>, bool> brute_mapping;
    for (const auto& p : phrases)
      for (const auto& k : kg_preds)
        if (rng() % 2) {
          const std::string phrase = normalize_predicate(p, stops);
          mapping.add(phrase, k, Provenance::kManual);
          brute_mapping[{phrase, k}] = true;
        }
    auto span = [&]() {
      const std::size_t s = rng() % 3;
      return std::make_pair(s, s + 1 + rng() % 2);
    };
    const std::size_t n_preds = rng() % 26, n_golds = rng() % 25;
    std::vector<Extraction> preds;
    for (std::size_t i = 0; i < n_preds; ++i) {
      Extraction p;
      p.sentence_id = "s" + std::to_string(rng() % 3);
      const auto [a, b] = span();
      const auto [x, y] = span();
      p.arg0 = make_chunk(sw, a, b);
      p.arg1 = make_chunk(sw, x + 3, std::min<std::size_t>(y + 3, 6));
      const auto& ph = phrases[rng() % phrases.size()];
      for (std::size_t k = 0; k < ph.size(); ++k) p.predicate.push_back({k, ph[k]});
      preds.push_back(std::move(p));
    }
    std::vector<GoldTriple> golds;
    for (std::size_t i = 0; i < n_golds; ++i) {
      GoldTriple gt;
      gt.sentence_id = "s" + std::to_string(rng() % 3);
      const auto [a, b] = span();
      const auto [x, y] = span();
      gt.arg0 = {join_words(sw, a, b), std::make_pair(a, b), std::nullopt};
      const std::size_t xs = x + 3, ye = std::min<std::size_t>(y + 3, 6);
      gt.arg1 = {join_words(sw, xs, ye), std::make_pair(xs, ye), std::nullopt};
      if (rng() % 4 == 0) gt.arg1.surface[0] = 'W';  // case only
      gt.predicate.surface = kg_preds[rng() % kg_preds.size()];
      golds.push_back(std::move(gt));
    }
    const MatchReport r = score_corpus(preds, golds, MatchRegime::kExact, &mapping, stops);
    const oracle::BruteReport bf = oracle::brute_force_exact(preds, golds, brute_mapping, stops);
    if (r.precision != bf.precision || r.recall != bf.recall || r.matched_pairs.size() != bf.matched)
      return "corpus " + std::to_string(t) + ": P/R " + fmt(r.precision) + "/" + fmt(r.recall) +
             " vs brute force " + fmt(bf.precision) + "/" + fmt(bf.recall);
    total_matched += bf.matched;
  }
  if (total_matched == 0) return "vacuous: no corpus produced a match";
  return {};
}

std::string auc_sanity() {
  const std::vector<PRPoint> curve = {{0.9, 1.0, 0.0}, {0.1, 0.5, 1.0}};
  const double area = trapezoid_auc(curve);
  if (std::abs(area - 0.75) > 1e-12) return "two-point AUC " + fmt(area);

  std::mt19937_64 rng(601);
  const std::vector<std::string> w = {"A", "p", "q", "B", "C"};
  for (int t = 0; t < 100; ++t) {
    std::vector<Extraction> preds;
    for (int i = 0; i < 10; ++i) {
      Extraction e;
      e.sentence_id = "s" + std::to_string(rng() % 3);
      e.arg0 = make_chunk(w, 0, 1);
      const std::size_t a1 = 3 + rng() % 2;
      e.arg1 = make_chunk(w, a1, a1 + 1);
      e.predicate = {{1, "p"}};
      if (rng() % 2) e.predicate.push_back({2, "q"});
      e.norm_score = std::uniform_real_distribution<double>(0, 1)(rng);
      if (rng() % 4 == 0) e.norm_score = 0.5;  // ties
      preds.push_back(std::move(e));
    }
    std::vector<GoldTriple> golds;
    for (int i = 0; i < 5; ++i)
      golds.push_back(surface_gold("s" + std::to_string(rng() % 3), "A", rng() % 2 ? "p" : "p q",
                                   rng() % 2 ? "B" : "C"));
    const AucResult r = auc_and_best_f1(preds, golds, MatchRegime::kTuple);
    double best = 0.0;
    for (const auto& p : r.curve) best = std::max(best, f1_score(p.precision, p.recall));
    if (r.best_f1 != best) return "assignment " + std::to_string(t) + ": best_f1 " +
                                  fmt(r.best_f1) + " vs curve max " + fmt(best);
    if (r.auc < 0.0 || r.auc > 1.0) return "AUC outside [0,1]: " + fmt(r.auc);
  }
  return {};
}

bool is_subsequence(const std::vector<Extraction>& small, const std::vector<Extraction>& big) {
  std::size_t j = 0;
  for (const auto& e : small) {
    while (j < big.size() && !(big[j] == e)) ++j;
    if (j == big.size()) return false;
    ++j;
  }
  return true;
}

std::string filter_laws() {
  const StopLists stops = StopLists::defaults();
  const std::vector<std::vector<std::string>> phrases = {
      {"born", "in"}, {"was", "born", "in"}, {"award"}, {"awarded"}, {"lives", "in"},
      {"founded"},    {"plays", "for"},      {"of"},    {"married", "to"}};
  std::mt19937_64 rng(602);
  for (int t = 0; t < 100; ++t) {
    std::vector<Extraction> corpus(rng() % 80);
    for (auto& e : corpus) {
      e.sentence_id = "s" + std::to_string(rng() % 10);
      const auto& p = phrases[rng() % phrases.size()];
      for (std::size_t k = 0; k < p.size(); ++k) e.predicate.push_back({k + 1, p[k]});
    }
    for (std::size_t lo = 1; lo <= 12; ++lo) {
      const auto a = filter_by_frequency(corpus, lo, stops);
      if (filter_by_frequency(a, lo, stops) != a)
        return "corpus " + std::to_string(t) + ": not idempotent at " + std::to_string(lo);
      const auto b = filter_by_frequency(corpus, lo + 1 + rng() % 4, stops);
      if (!is_subsequence(b, a) || !is_subsequence(a, corpus))
        return "corpus " + std::to_string(t) + ": raising the threshold added triples";
    }
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 6 + rng() % 10;
    const auto b = oracle::bundle_with_chunks("s", oracle::word_list(n), {});
    // arg0 = [0,1), arg1 = [n-1,n), predicate with at least one hole
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < n; ++i)
      if (rng() % 2) idx.push_back(i);
    bool gap = false;
    for (std::size_t i = 1; i < idx.size(); ++i) gap = gap || idx[i] != idx[i - 1] + 1;
    if (!gap) continue;
    Extraction e;
    e.arg0 = make_chunk(b.words, 0, 1);
    e.arg1 = make_chunk(b.words, n - 1, n);
    const bool r2l = rng() % 2;
    if (r2l) {
      std::swap(e.arg0, e.arg1);
      std::reverse(idx.begin(), idx.end());
      e.direction = Direction::kRightToLeft;
    }
    for (std::size_t i : idx) e.predicate.push_back({i, b.words[i]});
    if (check_contiguity(e, b)) return "accepted predicate with a gap";
  }
  return {};
}

std::string pmi_fixtures() {
  CooccurrenceTable correlated;
  correlated.add("born in", "per:city_of_birth", 4);
  correlated.add("founded by", "org:founded_by", 4);
  const double c = pmi2(correlated, "born in", "per:city_of_birth");
  if (std::abs(c) > 1e-12) return "correlated PMI2 " + fmt(c);

  CooccurrenceTable independent;
  for (const char* x : {"x", "a"})
    for (const char* y : {"y", "b"}) independent.add(x, y, 1);
  const double i = pmi2(independent, "x", "y");
  if (std::abs(i - std::log(0.25)) > 1e-12) return "independent PMI2 " + fmt(i);

  std::mt19937_64 rng(603);
  std::uniform_real_distribution<double> thr(-4.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    CooccurrenceTable table;
    const int cells = static_cast<int>(rng() % 20);
    for (int k = 0; k < cells; ++k)
      table.add("p" + std::to_string(rng() % 5), "k" + std::to_string(rng() % 4), 1 + rng() % 6);
    PredicateMapping seed;
    for (int k = 0; k < 3; ++k)
      seed.add("p" + std::to_string(rng() % 7), "k" + std::to_string(rng() % 5), Provenance::kManual);
    double lo = thr(rng), hi = thr(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto a = bootstrap_mapping(table, seed, lo);
    const auto b = bootstrap_mapping(table, seed, hi);
    if (!a.includes(seed) || !b.includes(seed)) return "bootstrap dropped a seed entry";
    if (!a.includes(b)) return "raising the PMI2 threshold added entries";
  }
  return {};
}

std::string alignment_soundness() {
  std::mt19937_64 rng(604);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "he", "it"};
  std::size_t emitted = 0;
  for (int t = 0; t < 1000; ++t) {
    MentionDictionary dict;
    for (int i = 0; i < 10; ++i) {
      std::string m;
      const int len = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < len; ++k) m += (k ? " " : "") + vocab[rng() % vocab.size()];
      dict.add(m, "E" + std::to_string(rng() % 6), 0.05 + 0.95 * (rng() % 100) / 100.0);
    }
    std::vector<KGTriple> raw;
    KGStore kg;
    for (int i = 0; i < 12; ++i) {
      KGTriple tr{"E" + std::to_string(rng() % 6), "P" + std::to_string(rng() % 3),
                  "E" + std::to_string(rng() % 6)};
      raw.push_back(tr);
      kg.add(tr);
    }
    SentenceBundle b;
    b.sentence_id = "s";
    for (int k = 0; k < 14; ++k) b.words.push_back(vocab[rng() % vocab.size()]);
    b.subword_map = identity_subword_map(b.words.size());

    const auto linked = link_mentions(b, dict);
    for (std::size_t i = 0; i < linked.size(); ++i) {
      const std::string key = text::fold(linked[i].span.surface);
      if (!dict.contains(key)) return "linked span '" + key + "' not in the dictionary";
      if (dict.find(key)->front().entity_id != linked[i].entity_id) return "not the top entity";
      if (i > 0 && linked[i - 1].span.end > linked[i].span.start) return "overlapping spans";
    }
    auto entity_at = [&](std::pair<std::size_t, std::size_t> span) {
      for (const auto& m : linked)
        if (m.span.start == span.first && m.span.end == span.second) return m.entity_id;
      return std::string();
    };
    for (const GoldTriple& g : align_distant(b, linked, kg)) {
      const KGTriple tr{entity_at(*g.arg0.span), g.predicate.surface, entity_at(*g.arg1.span)};
      if (std::find(raw.begin(), raw.end(), tr) == raw.end())
        return "gold (" + tr.subject + ", " + tr.predicate + ", " + tr.object + ") not in the KG";
      ++emitted;
    }
  }
  if (emitted == 0) return "vacuous: no gold triple was emitted";
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_round_trips() {
  std::mt19937_64 rng(605);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("attnoie_acceptance_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(p, ec);
    }
  } cleanup{dir};

  std::vector<AttentionRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back({"r" + std::to_string(i), oracle::random_tensor(rng)});
  write_attention_file(dir / "a.atn", records);
  const AttentionReader reader(dir / "a.atn");
  if (reader.record_count() != records.size()) return "ATN1 record count differs";
  std::vector<AttentionRecord> back;
  for (const auto& r : records) {
    const AttentionTensor t = reader.read_record(r.sentence_id);
    if (t.layers != r.tensor.layers || t.heads != r.tensor.heads ||
        t.subwords != r.tensor.subwords || t.values.size() != r.tensor.values.size() ||
        std::memcmp(t.values.data(), r.tensor.values.data(), 4 * t.values.size()) != 0)
      return "ATN1 record '" + r.sentence_id + "' payload differs";
    back.push_back({r.sentence_id, t});
  }
  write_attention_file(dir / "b.atn", back);
  if (slurp(dir / "a.atn") != slurp(dir / "b.atn")) return "ATN1 rewrite is not byte-identical";

  // The committed fixture comes from an independent writer.
  const AttentionReader fixture(kFixtures + "/dylan.atn");
  std::vector<AttentionRecord> fx;
  for (const char* id : {"dylan", "dylan_ext"}) fx.push_back({id, fixture.read_record(id)});
  write_attention_file(dir / "fx.atn", fx);
  if (slurp(dir / "fx.atn") != slurp(kFixtures + "/dylan.atn"))
    return "ATN1 writer disagrees with the committed fixture bytes";

  std::string jsonl;
  std::vector<SentenceBundle> bundles;
  for (int i = 0; i < 100; ++i) {
    bundles.push_back(oracle::random_bundle("b" + std::to_string(i), rng));
    jsonl += bundle_to_json(bundles.back()).dump() + "\n";
  }
  {
    std::ofstream out(dir / "b.jsonl", std::ios::binary);
    out << jsonl;
  }
  const auto read = read_bundles(dir / "b.jsonl");
  if (read != bundles) return "bundle JSONL read differs from what was written";
  std::string again;
  for (const auto& b : read) again += bundle_to_json(b).dump() + "\n";
  if (again != jsonl) return "bundle JSONL rewrite is not byte-identical";
  return {};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"Golden extraction (beam 1, raw 0.7 +/- 1e-9)", 1.0, golden_extraction},
      {"Oracle equivalence (500 sentences, n <= 8, k = 64)", 30.0, oracle_equivalence},
      {"Metric identities (200 corpora vs brute force; tuple credits)", 10.0, metric_identities},
      {"AUC sanity (two-point 0.75; best_f1 = curve max x100)", 0.0, auc_sanity},
      {"Filter laws (frequency x100 corpora; contiguity)", 0.0, filter_laws},
      {"PMI2 fixtures and bootstrap properties", 0.0, pmi_fixtures},
      {"Alignment soundness (1000 trials)", 0.0, alignment_soundness},
      {"Format round-trips (ATN1 and bundle JSONL, 100 records)", 0.0, format_round_trips},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string problem;
    try {
      problem = c.check();
    } catch (const std::exception& e) {
      problem = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (problem.empty() && c.budget_seconds > 0 && secs > c.budget_seconds)
      problem = "took " + fmt(secs) + " s, budget " + fmt(c.budget_seconds) + " s";
    std::printf("%s  %-64s %8.3f s%s%s\n", problem.empty() ? "PASS" : "FAIL", c.name.c_str(), secs,
                problem.empty() ? "" : "  -- ", problem.c_str());
    if (!problem.empty()) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
