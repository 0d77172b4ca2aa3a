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

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgrag/embedding.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/providers.hpp"

// Context retrieval over a store of unit-norm context embeddings, each
// with the entity-centric spans extracted from it. The span-weighted
// reranker only ever reconsiders the top two contexts.
namespace kgrag::retrieval {

// Slack for comparing score differences against schedule bounds, so a
// difference such as 0.80 - 0.79 lands in the 0.01 bucket.
inline constexpr double kScoreTolerance = 1e-9;

struct ContextRecord {
  std::string id;
  std::string text;
  Embedding embedding;
};

struct SpanRecord {
  std::string context_id;
  std::string entity_id;
  std::string text;
  Embedding embedding;
};

class ContextStore {
 public:
  // Throws ValidationError for a duplicate id or a dimension mismatch.
  void add_context(std::string id, std::string text, Embedding embedding);
  // Throws ValidationError for an unknown context.
  void add_span(std::string context_id, std::string entity_id, std::string text,
                Embedding embedding);

  std::size_t size() const { return contexts_.size(); }
  bool empty() const { return contexts_.empty(); }
  std::size_t dim() const { return dim_; }
  const std::vector<ContextRecord>& contexts() const { return contexts_; }
  const std::vector<SpanRecord>& spans(std::size_t context) const { return spans_[context]; }
  std::size_t span_count() const;
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  void check_dim(const Embedding& e);

  std::vector<ContextRecord> contexts_;
  std::vector<std::vector<SpanRecord>> spans_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t dim_ = 0;
};

inline constexpr int kStoreSchemaVersion = 1;

// JSONL: a schema header, then {"kind":"context",...} and {"kind":"span",...}
// records with embedded vectors.
void save_store(const ContextStore& store, const std::filesystem::path& path);
ContextStore load_store(const std::filesystem::path& path);

// Embeds contexts and spans in batches and assembles a store.
ContextStore build_store(const std::vector<extraction::TextUnit>& contexts,
                         const std::vector<extraction::EntityCentricSpan>& spans,
                         providers::EmbedClient& embedder, std::size_t batch = 256);

struct Bucket {
  double upper_bound = 0.0;
  double weight = 0.0;

  friend bool operator==(const Bucket&, const Bucket&) = default;
};

class SpanWeightSchedule {
 public:
  // Throws ValidationError unless bounds are positive and strictly
  // increasing, weights lie in [0, 1] and the last bound equals the entry
  // threshold.
  SpanWeightSchedule(std::vector<Bucket> buckets, double entry_threshold);

  // 0.01:0.10, 0.02:0.15, 0.03:0.20, 0.04:0.25, 0.05:0.30; threshold 0.05.
  static SpanWeightSchedule table_one();
  // One bucket with a fixed weight (0 = context only, 1 = span only).
  static SpanWeightSchedule uniform(double weight, double entry_threshold = 0.05);
  // Same weights, entry threshold lowered to `threshold`.
  SpanWeightSchedule truncated(double threshold) const;

  const std::vector<Bucket>& buckets() const { return buckets_; }
  double entry_threshold() const { return entry_threshold_; }

  friend bool operator==(const SpanWeightSchedule&, const SpanWeightSchedule&) = default;

 private:
  std::vector<Bucket> buckets_;
  double entry_threshold_;
};

// Weight of the smallest bucket whose bound is >= score_diff. Throws
// ValidationError outside [0, entry_threshold].
double get_span_weight(const SpanWeightSchedule& schedule, double score_diff);

// True when the top-2 gap is small enough to consult the spans.
bool needs_reweighting(const SpanWeightSchedule& schedule, double s1, double s2);

struct ScoreDecision {
  bool second_wins = false;
  bool reweighted = false;
  double weight = 0.0;
  double final1 = 0.0;
  double final2 = 0.0;
};

// The reranking arithmetic on the top-2 scores. es1/es2 are the best span
// scores of each context, std::nullopt when a context has no spans (which
// skips reweighting).
ScoreDecision decide_scores(const SpanWeightSchedule& schedule, double s1, double s2,
                            std::optional<double> es1, std::optional<double> es2);

struct ContextDecision {
  std::string context_id;
  std::pair<std::string, std::string> top2;
  double s1 = 0.0;
  double s2 = 0.0;
  std::optional<double> es1;
  std::optional<double> es2;
  bool spans_scored = false;
  ScoreDecision scores;
};

// Throws ValidationError for a store with fewer than two contexts.
ContextDecision retrieve_context(const ContextStore& store,
                                 const SpanWeightSchedule& schedule,
                                 const Embedding& query);

struct RankedContext {
  std::string id;
  double score = 0.0;
};

// Top-k by dot product, ties by context id. Throws ValidationError for
// k == 0.
std::vector<RankedContext> baseline_topk(const ContextStore& store, const Embedding& query,
                                         std::size_t k);

// Throws ValidationError for an empty prediction list or a query without
// gold.
double precision_at_1(const std::vector<std::pair<std::string, std::string>>& predictions,
                      const std::map<std::string, std::string>& gold);

}  // namespace kgrag::retrieval
