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

#include "attnoie/kg_align.hpp"

#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "test_util.hpp"

namespace attnoie {
namespace {

SentenceBundle sentence(const std::string& text) {
  SentenceBundle b;
  b.sentence_id = "s";
  b.words = text::split_whitespace(text);
  b.subword_map = identity_subword_map(b.words.size());
  return b;
}

TEST(LinkMentions, LongestMatchWins) {
  MentionDictionary dict;
  dict.add("bob dylan", "E392", 0.9);
  dict.add("dylan", "E392", 0.6);
  const auto linked = link_mentions(sentence("Bob Dylan was born"), dict);
  ASSERT_EQ(linked.size(), 1u);
  EXPECT_EQ(linked[0].span.start, 0u);
  EXPECT_EQ(linked[0].span.end, 2u);
  EXPECT_EQ(linked[0].span.surface, "Bob Dylan");
  EXPECT_EQ(linked[0].entity_id, "E392");
}

TEST(LinkMentions, NoHits) {
  MentionDictionary dict;
  dict.add("minnesota", "E1527", 1.0);
  EXPECT_TRUE(link_mentions(sentence("Bob Dylan was born"), dict).empty());
  EXPECT_TRUE(link_mentions(sentence("Bob Dylan was born"), MentionDictionary{}).empty());
}

TEST(LinkMentions, OverlappingCandidates) {
  MentionDictionary dict;
  dict.add("new york", "Q1", 0.8);
  dict.add("york city", "Q2", 0.7);
  dict.add("new york city", "Q60", 0.9);
  const auto linked = link_mentions(sentence("new york city"), dict);
  ASSERT_EQ(linked.size(), 1u);
  EXPECT_EQ(linked[0].span.start, 0u);
  EXPECT_EQ(linked[0].span.end, 3u);
  EXPECT_EQ(linked[0].entity_id, "Q60");
}

TEST(LinkMentions, TopCandidateAndCaseFolding) {
  MentionDictionary dict;
  dict.add("Paris", "Q167646", 0.1);
  dict.add("PARIS", "Q90", 0.85);
  const auto linked = link_mentions(sentence("She moved to paris"), dict);
  ASSERT_EQ(linked.size(), 1u);
  EXPECT_EQ(linked[0].entity_id, "Q90");
  EXPECT_DOUBLE_EQ(linked[0].probability, 0.85);
}

TEST(LinkMentions, PronounsNeverLinked) {
  MentionDictionary dict;
  dict.add("he", "E392", 0.2);
  dict.add("it", "E5", 0.2);
  EXPECT_TRUE(link_mentions(sentence("He said it was fine"), dict).empty());
}

TEST(LinkMentions, SpansDisjointAndSorted) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "he"};
  for (int trial = 0; trial < 300; ++trial) {
    MentionDictionary dict;
    for (int i = 0; i < 8; ++i) {
      std::string m;
      const int len = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < len; ++k) m += (k ? " " : "") + vocab[rng() % vocab.size()];
      dict.add(m, "E" + std::to_string(rng() % 4), 0.5);
    }
    std::string text;
    for (int k = 0; k < 12; ++k) text += (k ? " " : "") + vocab[rng() % vocab.size()];
    const auto linked = link_mentions(sentence(text), dict);
    for (std::size_t i = 0; i < linked.size(); ++i) {
      EXPECT_LT(linked[i].span.start, linked[i].span.end);
      if (i > 0) {
        EXPECT_LE(linked[i - 1].span.end, linked[i].span.start);
      }
      EXPECT_TRUE(dict.contains(text::fold(linked[i].span.surface)));
    }
  }
}

std::vector<LinkedMention> linked_at(const SentenceBundle& b,
                                     std::vector<std::tuple<std::size_t, std::size_t, std::string>> spans) {
  std::vector<LinkedMention> out;
  for (auto& [s, e, id] : spans) out.push_back({make_chunk(b.words, s, e), id, 1.0});
  return out;
}

TEST(AlignDistant, OneGold) {
  const SentenceBundle b = sentence("Dylan was born in Minnesota");
  KGStore kg;
  kg.add({"E392", "birth_place", "E1527"});
  const auto golds = align_distant(b, linked_at(b, {{0, 1, "E392"}, {4, 5, "E1527"}}), kg);
  ASSERT_EQ(golds.size(), 1u);
  EXPECT_EQ(golds[0].arg0.surface, "Dylan");
  EXPECT_EQ(golds[0].arg0.span, std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(golds[0].predicate.surface, "birth_place");
  EXPECT_EQ(golds[0].arg1.span, std::make_pair(std::size_t{4}, std::size_t{5}));
  EXPECT_EQ(golds[0].sentence_id, "s");
}

TEST(AlignDistant, EmptyKg) {
  const SentenceBundle b = sentence("Dylan was born in Minnesota");
  EXPECT_TRUE(align_distant(b, linked_at(b, {{0, 1, "E392"}, {4, 5, "E1527"}}), KGStore{}).empty());
}

TEST(AlignDistant, ThreeEntitiesTwoPairs) {
  const SentenceBundle b = sentence("Jobs founded Apple in Cupertino");
  KGStore kg;
  kg.add({"Q2", "founded_by", "Q1"});
  kg.add({"Q2", "headquarters", "Q3"});
  kg.add({"Q9", "unrelated", "Q1"});
  const auto golds =
      align_distant(b, linked_at(b, {{0, 1, "Q1"}, {2, 3, "Q2"}, {4, 5, "Q3"}}), kg);
  ASSERT_EQ(golds.size(), 2u);
}

// Every emitted (e1, predicate, e2) is in the raw triple list.
TEST(AlignDistant, Sound) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<KGTriple> raw;
    KGStore kg;
    for (int i = 0; i < 10; ++i) {
      KGTriple t{"E" + std::to_string(rng() % 5), "P" + std::to_string(rng() % 3),
                 "E" + std::to_string(rng() % 5)};
      raw.push_back(t);
      kg.add(t);
    }
    const SentenceBundle b = sentence("w0 w1 w2 w3 w4 w5");
    std::vector<LinkedMention> linked;
    for (std::size_t w = 0; w < 6; ++w)
      if (rng() % 2) linked.push_back({make_chunk(b.words, w, w + 1), "E" + std::to_string(rng() % 5), 1.0});
    auto entity_at = [&](std::size_t start) {
      for (const auto& m : linked)
        if (m.span.start == start) return m.entity_id;
      return std::string();
    };
    for (const GoldTriple& g : align_distant(b, linked, kg)) {
      const KGTriple t{entity_at(g.arg0.span->first), g.predicate.surface,
                       entity_at(g.arg1.span->first)};
      EXPECT_NE(std::find(raw.begin(), raw.end(), t), raw.end());
      EXPECT_NE(t.subject, t.object);
    }
  }
}

TEST(ArgumentEntity, LongestInsideChunk) {
  const SentenceBundle b = sentence("the Bob Dylan album");
  const auto linked = linked_at(b, {{1, 2, "E1"}, {1, 3, "E392"}});
  EXPECT_EQ(argument_entity(make_chunk(b.words, 0, 4), linked)->entity_id, "E392");
  EXPECT_EQ(argument_entity(make_chunk(b.words, 0, 2), linked)->entity_id, "E1");
  EXPECT_EQ(argument_entity(make_chunk(b.words, 3, 4), linked), nullptr);
}

TEST(Dictionary, LoadSaveRoundTrip) {
  test::TempDir dir;
  const auto path = dir.path() / "dict.tsv";
  test::spit(path, "Bob Dylan\tE392\t0.9\ndylan\tE392\t0.6\ndylan\tE77\t0.3333333333333333\n\n");
  const MentionDictionary dict = load_dictionary(path);
  EXPECT_TRUE(dict.contains("bob dylan"));
  ASSERT_EQ(dict.find("dylan")->size(), 2u);
  EXPECT_EQ(dict.find("dylan")->front().entity_id, "E392");
  const auto saved = dir.path() / "saved.tsv";
  test::spit(saved, dictionary_to_tsv(dict));
  EXPECT_EQ(load_dictionary(saved), dict);
  EXPECT_EQ(dictionary_to_tsv(load_dictionary(saved)), dictionary_to_tsv(dict));
}

TEST(Dictionary, RejectsBadRows) {
  test::TempDir dir;
  const auto path = dir.path() / "dict.tsv";
  for (const char* bad : {"dylan\tE392\n", "dylan\tE392\t0\n", "dylan\tE392\t1.5\n",
                          "dylan\tE392\tabc\n"}) {
    test::spit(path, bad);
    try {
      load_dictionary(path);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
    }
  }
}

TEST(KG, LoadIndexesByPair) {
  test::TempDir dir;
  const auto path = dir.path() / "kg.tsv";
  test::spit(path, "E392\tbirth_place\tE1527\nE392\tresidence\tE1527\n");
  const KGStore kg = load_kg(path);
  EXPECT_EQ(kg.size(), 2u);
  EXPECT_EQ(kg.predicates("E392", "E1527")->size(), 2u);
  EXPECT_EQ(kg.predicates("E1527", "E392"), nullptr);
  test::spit(path, "E392\tbirth_place\n");
  EXPECT_THROW(load_kg(path), Error);
}

}  // namespace
}  // namespace attnoie
