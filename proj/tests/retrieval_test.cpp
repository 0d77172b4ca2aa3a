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

#include <cmath>
#include <random>

#include "fake_model.hpp"
#include "kgrag/error.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag::retrieval {
namespace {

constexpr std::size_t kDim = 16;

// Unit vector with cosine `score` against the query basis vector e0; the
// remainder goes to axis `axis`.
Embedding at(double score, std::size_t axis) {
  std::vector<double> v(kDim, 0.0);
  v[0] = score;
  v[axis] = std::sqrt(std::max(0.0, 1.0 - score * score));
  return Embedding::normalize(v);
}

Embedding query() { return at(1.0, 1); }

ContextStore two_contexts(double s1, double s2, std::optional<double> es1,
                          std::optional<double> es2) {
  ContextStore store;
  store.add_context("c1", "first", at(s1, 1));
  store.add_context("c2", "second", at(s2, 2));
  if (es1) store.add_span("c1", "e1", "span one", at(*es1, 3));
  if (es2) store.add_span("c2", "e2", "span two", at(*es2, 4));
  return store;
}

TEST(Schedule, TableOneWeights) {
  const auto t = SpanWeightSchedule::table_one();
  EXPECT_DOUBLE_EQ(get_span_weight(t, 0.01), 0.10);
  EXPECT_DOUBLE_EQ(get_span_weight(t, 0.035), 0.25);
  EXPECT_DOUBLE_EQ(get_span_weight(t, 0.05), 0.30);
  EXPECT_DOUBLE_EQ(get_span_weight(t, 0.0), 0.10);
  EXPECT_DOUBLE_EQ(get_span_weight(t, 0.015), 0.15);
  EXPECT_DOUBLE_EQ(t.entry_threshold(), 0.05);
  EXPECT_THROW(get_span_weight(t, 0.051), ValidationError);
  EXPECT_THROW(get_span_weight(t, -0.01), ValidationError);
}

TEST(Schedule, BucketsIncreasingAndEndAtThreshold) {
  EXPECT_THROW(SpanWeightSchedule({{0.02, 0.1}, {0.01, 0.2}}, 0.01), ValidationError);
  EXPECT_THROW(SpanWeightSchedule({{0.01, 0.1}, {0.02, 0.2}}, 0.05), ValidationError);
  EXPECT_THROW(SpanWeightSchedule({{0.01, 1.5}}, 0.01), ValidationError);
  EXPECT_THROW(SpanWeightSchedule({}, 0.05), ValidationError);
  EXPECT_NO_THROW(SpanWeightSchedule({{0.01, 0.0}, {0.05, 1.0}}, 0.05));
}

TEST(Schedule, TruncatedKeepsLowBuckets) {
  const auto t = SpanWeightSchedule::table_one().truncated(0.01);
  ASSERT_EQ(t.buckets().size(), 1u);
  EXPECT_DOUBLE_EQ(t.entry_threshold(), 0.01);
  EXPECT_DOUBLE_EQ(t.buckets()[0].weight, 0.10);
}

TEST(Decide, WorkedExampleSecondWins) {
  const auto d = decide_scores(SpanWeightSchedule::table_one(), 0.80, 0.79, 0.50, 0.90);
  EXPECT_TRUE(d.reweighted);
  EXPECT_NEAR(d.weight, 0.10, 1e-12);
  EXPECT_NEAR(d.final1, 0.80, 1e-12);
  EXPECT_NEAR(d.final2, 0.801, 1e-12);
  EXPECT_TRUE(d.second_wins);
}

TEST(Decide, WideGapSkipsSpans) {
  const auto d = decide_scores(SpanWeightSchedule::table_one(), 0.90, 0.60, 0.0, 1.0);
  EXPECT_FALSE(d.reweighted);
  EXPECT_FALSE(d.second_wins);
}

TEST(Decide, SpanScoresEqualToContextScoresKeepWinner) {
  const auto d = decide_scores(SpanWeightSchedule::table_one(), 0.7, 0.68, 0.7, 0.68);
  EXPECT_FALSE(d.second_wins);
  EXPECT_DOUBLE_EQ(d.final1, 0.7);
}

TEST(Decide, FinalTieGoesToSecond) {
  const auto d = decide_scores(SpanWeightSchedule::uniform(0.0), 0.5, 0.5, 0.1, 0.1);
  EXPECT_TRUE(d.second_wins);
}

TEST(Decide, MissingSpanSkipsReweighting) {
  const auto d = decide_scores(SpanWeightSchedule::table_one(), 0.80, 0.79, std::nullopt, 0.90);
  EXPECT_FALSE(d.reweighted);
  EXPECT_FALSE(d.second_wins);
}

TEST(RetrieveContext, WorkedExampleThroughStore) {
  const auto store = two_contexts(0.80, 0.79, 0.50, 0.90);
  const auto d = retrieve_context(store, SpanWeightSchedule::table_one(), query());
  EXPECT_EQ(d.context_id, "c2");
  EXPECT_EQ(d.top2, (std::pair<std::string, std::string>{"c1", "c2"}));
  EXPECT_TRUE(d.spans_scored);
  EXPECT_NEAR(*d.es1, 0.50, 1e-6);
  EXPECT_NEAR(d.scores.final2, 0.801, 1e-6);
}

TEST(RetrieveContext, ThresholdBranchNoSpans) {
  const auto store = two_contexts(0.90, 0.60, 0.1, 0.99);
  const auto d = retrieve_context(store, SpanWeightSchedule::table_one(), query());
  EXPECT_EQ(d.context_id, "c1");
  EXPECT_FALSE(d.spans_scored);
}

TEST(RetrieveContext, EmptySpansGiveBaselineWinner) {
  const auto store = two_contexts(0.79, 0.80, std::nullopt, std::nullopt);
  const auto d = retrieve_context(store, SpanWeightSchedule::table_one(), query());
  EXPECT_EQ(d.context_id, "c2");
  EXPECT_FALSE(d.scores.reweighted);
}

TEST(RetrieveContext, BestSpanPerContextIsUsed) {
  auto store = two_contexts(0.80, 0.79, 0.10, 0.20);
  store.add_span("c2", "e3", "span three", at(0.90, 5));
  const auto d = retrieve_context(store, SpanWeightSchedule::table_one(), query());
  EXPECT_NEAR(*d.es2, 0.90, 1e-6);
  EXPECT_EQ(d.context_id, "c2");
}

TEST(RetrieveContext, NeedsTwoContexts) {
  ContextStore store;
  EXPECT_THROW(retrieve_context(store, SpanWeightSchedule::table_one(), query()), ValidationError);
  store.add_context("c1", "x", query());
  EXPECT_THROW(retrieve_context(store, SpanWeightSchedule::table_one(), query()), ValidationError);
}

ContextStore random_store(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> score(0.3, 0.95);
  std::uniform_int_distribution<int> spans(0, 3);
  ContextStore store;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "c" + std::to_string(i);
    store.add_context(id, id, at(score(rng), 1 + i % (kDim - 1)));
    const int ns = spans(rng);
    for (int j = 0; j < ns; ++j) {
      store.add_span(id, "e" + std::to_string(j), "s", at(score(rng), 1 + (i + j + 1) % (kDim - 1)));
    }
  }
  return store;
}

TEST(RetrieveContext, ZeroWeightsMatchBaseline) {
  std::mt19937 rng(7);
  const auto zero = SpanWeightSchedule({{0.01, 0.0}, {0.05, 0.0}}, 0.05);
  for (int round = 0; round < 200; ++round) {
    const auto store = random_store(rng, 2 + round % 6);
    const auto d = retrieve_context(store, zero, query());
    const auto b = baseline_topk(store, query(), 1);
    if (d.s1 != d.s2) EXPECT_EQ(d.context_id, b.front().id) << round;
  }
}

TEST(RetrieveContext, FinalsNeverDecrease) {
  std::mt19937 rng(11);
  for (int round = 0; round < 200; ++round) {
    const auto store = random_store(rng, 2 + round % 5);
    const auto d = retrieve_context(store, SpanWeightSchedule::table_one(), query());
    EXPECT_GE(d.scores.final1, d.s1);
    EXPECT_GE(d.scores.final2, d.s2);
    EXPECT_GE(d.s1, d.s2);
    if (d.s1 - d.s2 >= 0.05) EXPECT_EQ(d.context_id, baseline_topk(store, query(), 1)[0].id);
  }
}

TEST(Baseline, TiesByIdAndTruncation) {
  ContextStore store;
  store.add_context("b", "x", at(0.5, 1));
  store.add_context("a", "y", at(0.5, 2));
  store.add_context("c", "z", at(0.9, 3));
  const auto r = baseline_topk(store, query(), 10);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].id, "c");
  EXPECT_EQ(r[1].id, "a");
  EXPECT_EQ(r[2].id, "b");
  EXPECT_EQ(baseline_topk(store, query(), 1).front().id, "c");
  EXPECT_THROW(baseline_topk(store, query(), 0), ValidationError);
}

TEST(Precision, Counting) {
  const std::map<std::string, std::string> gold{{"q1", "c1"}, {"q2", "c2"}};
  EXPECT_DOUBLE_EQ(precision_at_1({{"q1", "c1"}, {"q2", "c2"}}, gold), 1.0);
  EXPECT_DOUBLE_EQ(precision_at_1({{"q1", "c1"}, {"q2", "c1"}}, gold), 0.5);
  EXPECT_THROW(precision_at_1({}, gold), ValidationError);
  EXPECT_THROW(precision_at_1({{"q3", "c1"}}, gold), ValidationError);
}

TEST(Store, RejectsDuplicatesAndDimensionMismatch) {
  ContextStore store;
  store.add_context("c1", "x", query());
  EXPECT_THROW(store.add_context("c1", "y", query()), ValidationError);
  EXPECT_THROW(store.add_context("c2", "y", Embedding::normalize(std::vector<double>{1.0, 0.0})),
               ValidationError);
  EXPECT_THROW(store.add_span("c9", "e", "t", query()), ValidationError);
}

TEST(Store, SaveLoadRoundTrip) {
  testing::TempDir dir;
  std::mt19937 rng(3);
  const auto store = random_store(rng, 6);
  save_store(store, dir / "store.jsonl");
  const auto back = load_store(dir / "store.jsonl");
  ASSERT_EQ(back.size(), store.size());
  EXPECT_EQ(back.span_count(), store.span_count());
  for (std::size_t i = 0; i < store.size(); ++i) {
    EXPECT_EQ(back.contexts()[i].id, store.contexts()[i].id);
    EXPECT_NEAR(dot(back.contexts()[i].embedding, store.contexts()[i].embedding), 1.0, 1e-6);
    EXPECT_EQ(back.spans(i).size(), store.spans(i).size());
  }
}

TEST(Store, CorruptLineNamed) {
  testing::TempDir dir;
  ContextStore store;
  store.add_context("c1", "x", query());
  save_store(store, dir / "store.jsonl");
  auto text = testing::read_text(dir / "store.jsonl");
  text += "{not json\n";
  testing::write_text(dir / "store.jsonl", text);
  try {
    load_store(dir / "store.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace kgrag::retrieval
