// Copyright 2026 The kgrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "fake_model.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"
#include "kgrag/linker.hpp"
#include "oracles.hpp"

namespace kgrag::linker {
namespace {

using vocab::VocabEntry;
using vocab::Vocabulary;

Vocabulary vocab_of(const std::vector<std::pair<std::string, std::string>>& id_surface) {
  std::vector<VocabEntry> es;
  for (const auto& [id, s] : id_surface) es.push_back({id, s, s, true, "test"});
  return Vocabulary::from_entries(es);
}

corpus::Paragraph para(std::string text) {
  corpus::Paragraph p;
  p.path = "d/body/0";
  p.text = std::move(text);
  return p;
}

std::vector<corpus::TokenSpan> toks(std::size_t n) {
  std::vector<corpus::TokenSpan> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({i * 2, i * 2 + 1, "w", "w"});
  return t;
}

TEST(NGrams, CountFormula) {
  EXPECT_EQ(generate_ngrams(toks(1), 3).size(), 1u);
  EXPECT_EQ(generate_ngrams(toks(3), 2).size(), 5u);
  EXPECT_EQ(generate_ngrams(toks(5), 3).size(), 12u);
  EXPECT_TRUE(generate_ngrams(toks(0), 3).empty());
}

TEST(NGrams, StartThenLengthOrder) {
  const auto g = generate_ngrams(corpus::tokenize("a b c"), 2);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g[0].range, (TokenRange{0, 1}));
  EXPECT_EQ(g[1].range, (TokenRange{0, 2}));
  EXPECT_EQ(g[1].text, "a b");
  EXPECT_EQ(g[4].range, (TokenRange{2, 3}));
}

TEST(Fuzzy, Examples) {
  EXPECT_DOUBLE_EQ(entsim_fuzzy("neuron", "neuron"), 1.0);
  EXPECT_DOUBLE_EQ(entsim_fuzzy("neuron", "neurons"), 1.0 - 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(entsim_fuzzy("abc", "xyz"), 0.0);
  EXPECT_DOUBLE_EQ(entsim_fuzzy("", ""), 1.0);
}

TEST(Fuzzy, SymmetricAndOneIffEqual) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_word(rng, 0, 6, "abc");
    const auto b = testing::random_word(rng, 0, 6, "abc");
    EXPECT_EQ(entsim_fuzzy(a, b), entsim_fuzzy(b, a));
    EXPECT_EQ(entsim_fuzzy(a, b) == 1.0, a == b);
  }
}

TEST(Embed, CosineExamples) {
  const auto v = Embedding::normalize(std::vector<double>{1.0, 2.0, 2.0});
  const auto neg = Embedding::normalize(std::vector<double>{-1.0, -2.0, -2.0});
  const auto x = Embedding::normalize(std::vector<double>{1.0, 0.0});
  const auto y = Embedding::normalize(std::vector<double>{0.0, 1.0});
  EXPECT_NEAR(entsim_embed(v, v), 1.0, 1e-7);
  EXPECT_LE(entsim_embed(v, v), 1.0);
  EXPECT_DOUBLE_EQ(entsim_embed(x, y), 0.0);
  EXPECT_NEAR(entsim_embed(v, neg), -1.0, 1e-7);
  EXPECT_GE(entsim_embed(v, neg), -1.0);
  EXPECT_THROW(entsim_embed(v, x), ValidationError);
}

TEST(Match, ExactSurfaceFound) {
  const auto v = vocab_of({{"e:h", "hippocampus"}});
  SurfaceIndex index(v);
  LinkerConfig cfg;
  cfg.alpha = 0.9;
  const auto c = match_candidates(generate_ngrams(corpus::tokenize("the hippocampus"), 6),
                                  index, cfg);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].ngram.range, (TokenRange{1, 2}));
  EXPECT_DOUBLE_EQ(c[0].score, 1.0);
}

TEST(Match, EmptyTokensAndStrictThreshold) {
  const auto v = vocab_of({{"e:h", "hippocampus"}});
  SurfaceIndex index(v);
  LinkerConfig cfg;
  EXPECT_TRUE(match_candidates({}, index, cfg).empty());
  cfg.alpha = 1.0;
  EXPECT_TRUE(
      match_candidates(generate_ngrams(corpus::tokenize("hipocampus"), 6), index, cfg).empty());
}

TEST(Match, BestEntityWithIdTieBreak) {
  const auto v = vocab_of({{"z", "neurone"}, {"a", "neuronx"}});
  SurfaceIndex index(v);
  LinkerConfig cfg;
  cfg.alpha = 0.8;
  const auto c = match_candidates(generate_ngrams(corpus::tokenize("neuron"), 1), index, cfg);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].entity_id, "a");
}

TEST(Match, EmbedModeNeedsVectors) {
  const auto v = vocab_of({{"e", "x"}});
  SurfaceIndex index(v);
  LinkerConfig cfg = LinkerConfig::defaults(SimFn::kEmbed);
  EXPECT_THROW(match_candidates(generate_ngrams(corpus::tokenize("x"), 1), index, cfg), Error);
}

TEST(Select, LongerWins) {
  const std::vector<Candidate> c{{{{0, 2}, "a b"}, "e1", 0.95}, {{{1, 2}, "b"}, "e2", 0.99}};
  const auto m = select_mentions(c);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].token_range, (TokenRange{0, 2}));
}

TEST(Select, DisjointBothKeptAndEmpty) {
  const std::vector<Candidate> c{{{{2, 4}, "c d"}, "e2", 0.9}, {{{0, 1}, "a"}, "e1", 0.9}};
  const auto m = select_mentions(c);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].entity_id, "e1");
  EXPECT_TRUE(select_mentions({}).empty());
}

TEST(Select, ScoreThenStartBreaksLengthTies) {
  const std::vector<Candidate> c{{{{0, 2}, "a b"}, "e1", 0.91},
                                 {{{1, 3}, "b c"}, "e2", 0.97},
                                 {{{2, 4}, "c d"}, "e3", 0.91}};
  const auto m = select_mentions(c);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].entity_id, "e2");
}

TEST(Link, NoVocabularyTerm) {
  const auto v = vocab_of({{"e:h", "hippocampus"}});
  SurfaceIndex index(v);
  EXPECT_TRUE(link_entities(para("the cortex is large"), index, LinkerConfig{}).empty());
}

TEST(Link, TwoEntities) {
  const auto v = vocab_of({{"e:h", "hippocampus"}, {"e:a", "amygdala"}});
  SurfaceIndex index(v);
  const auto m = link_entities(para("the hippocampus and amygdala"), index, LinkerConfig{});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].entity_id, "e:h");
  EXPECT_EQ(m[1].entity_id, "e:a");
  EXPECT_EQ(m[1].surface, "amygdala");
  EXPECT_EQ(m[0].paragraph_path, "d/body/0");
}

TEST(Link, RepeatedTermTwice) {
  const auto v = vocab_of({{"e:h", "hippocampus"}});
  SurfaceIndex index(v);
  const auto m = link_entities(para("Hippocampus, then the hippocampus."), index, LinkerConfig{});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NE(m[0].token_range, m[1].token_range);
  EXPECT_EQ(m[0].surface, "Hippocampus");
}

TEST(Link, UnrelatedEntryChangesNothing) {
  const auto v1 = vocab_of({{"e:h", "hippocampus"}, {"e:o", "optic nerve"}});
  const auto v2 = vocab_of({{"e:h", "hippocampus"}, {"e:o", "optic nerve"}, {"e:q", "qqqqzzzz"}});
  SurfaceIndex i1(v1);
  SurfaceIndex i2(v2);
  const auto p = para("the optic nerves meet the hipocampus");
  EXPECT_EQ(link_entities(p, i1, LinkerConfig{}), link_entities(p, i2, LinkerConfig{}));
}

TEST(Link, MatchesBruteForceOracleFuzzy) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 40; ++round) {
    std::vector<VocabEntry> es;
    std::set<std::string> seen;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s = testing::random_word(rng, 2, 5, "abcd");
      if (rng() % 3 == 0) s += " " + testing::random_word(rng, 2, 4, "abcd");
      if (!seen.insert(s).second) continue;
      es.push_back({"id" + std::to_string(rng() % 50), s, s, false, "t"});
    }
    // One preferred entry per entity.
    std::set<std::string> named;
    for (auto& e : es) {
      if (named.insert(e.entity_id).second) e.is_preferred = true;
    }
    for (auto& e : es) {
      for (const auto& p : es) {
        if (p.entity_id == e.entity_id && p.is_preferred) e.standard_name = p.surface_form;
      }
    }
    const auto v = Vocabulary::from_entries(es);
    SurfaceIndex index(v);
    std::string text;
    for (std::size_t i = 0, len = rng() % 25; i < len; ++i) {
      text += testing::random_word(rng, 2, 5, "abcd") + (rng() % 5 == 0 ? ", " : " ");
    }
    LinkerConfig cfg;
    cfg.alpha = 0.6 + 0.1 * static_cast<double>(rng() % 5);
    cfg.max_n = 1 + rng() % 4;
    const auto got = link_entities(para(text), index, cfg);
    const auto want = testing::brute_force_link(
        text, v.entries(), cfg.max_n, cfg.alpha,
        [&](const std::string& g, std::size_t e) {
          return testing::dp_similarity(g, v.entries()[e].surface_form);
        });
    ASSERT_EQ(got.size(), want.size()) << text;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(*got[i].token_range, want[i].range);
      EXPECT_EQ(got[i].entity_id, want[i].entity_id);
      EXPECT_EQ(got[i].score, want[i].score);
    }
  }
}

TEST(Config, Validation) {
  LinkerConfig cfg;
  cfg.max_n = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.max_n = 2;
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(LinkerConfig::defaults(SimFn::kEmbed).alpha, kDefaultAlphaEmbed);
  EXPECT_EQ(parse_simfn("fuzzy"), SimFn::kFuzzy);
  EXPECT_THROW(parse_simfn("cosine"), ConfigError);
}

}  // namespace
}  // namespace kgrag::linker
