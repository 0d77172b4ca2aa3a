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

#include "kgrag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"

namespace kgrag::retrieval {
namespace {

constexpr std::string_view kStoreSchema = "kgrag.store";

Json vector_json(const Embedding& e) {
  Json arr = Json::array();
  for (float v : e.values()) arr.push_back(v);
  return arr;
}

Embedding vector_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": embedding must be a non-empty array");
  std::vector<float> v;
  v.reserve(j.size());
  for (const Json& x : j) {
    if (!x.is_number()) throw ParseError(where + ": embedding values must be numbers");
    v.push_back(x.get<float>());
  }
  try {
    return Embedding::from_unit(std::move(v));
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

std::string string_at(const Json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_string()) {
    throw ParseError(where + ": missing string field '" + key + "'");
  }
  return rec[key].get<std::string>();
}

// Descending score, then ascending id.
bool ranks_before(double sa, const std::string& ia, double sb, const std::string& ib) {
  if (sa != sb) return sa > sb;
  return ia < ib;
}

}  // namespace

// --- store --------------------------------------------------------------------

void ContextStore::check_dim(const Embedding& e) {
  if (e.empty()) throw ValidationError("embedding must be non-empty");
  if (dim_ == 0) dim_ = e.dim();
  if (e.dim() != dim_) {
    throw ValidationError("embedding dimension " + std::to_string(e.dim()) +
                          " does not match store dimension " + std::to_string(dim_));
  }
}

void ContextStore::add_context(std::string id, std::string text, Embedding embedding) {
  if (id.empty()) throw ValidationError("context id must be non-empty");
  if (ids_.contains(id)) throw ValidationError("duplicate context id '" + id + "'");
  check_dim(embedding);
  ids_.emplace(id, contexts_.size());
  contexts_.push_back({std::move(id), std::move(text), std::move(embedding)});
  spans_.emplace_back();
}

void ContextStore::add_span(std::string context_id, std::string entity_id, std::string text,
                            Embedding embedding) {
  const auto idx = find(context_id);
  if (!idx) throw ValidationError("span refers to unknown context '" + context_id + "'");
  check_dim(embedding);
  spans_[*idx].push_back(
      {std::move(context_id), std::move(entity_id), std::move(text), std::move(embedding)});
}

std::size_t ContextStore::span_count() const {
  std::size_t n = 0;
  for (const auto& s : spans_) n += s.size();
  return n;
}

std::optional<std::size_t> ContextStore::find(std::string_view id) const {
  const auto it = ids_.find(std::string(id));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void save_store(const ContextStore& store, const std::filesystem::path& path) {
  std::vector<Json> records{{{"schema", kStoreSchema}, {"version", kStoreSchemaVersion}}};
  for (const ContextRecord& c : store.contexts()) {
    records.push_back({{"kind", "context"},
                       {"id", c.id},
                       {"text", c.text},
                       {"embedding", vector_json(c.embedding)}});
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (const SpanRecord& s : store.spans(i)) {
      records.push_back({{"kind", "span"},
                         {"context_id", s.context_id},
                         {"entity_id", s.entity_id},
                         {"text", s.text},
                         {"embedding", vector_json(s.embedding)}});
    }
  }
  io::write_jsonl(path, records);
}

ContextStore load_store(const std::filesystem::path& path) {
  ContextStore store;
  bool header = true;
  io::for_each_jsonl(path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!rec.is_object()) throw ParseError(where + ": record is not an object");
    if (header) {
      if (!rec.contains("schema") || rec["schema"] != kStoreSchema) {
        throw ValidationError(where + ": expected schema '" + std::string(kStoreSchema) + "'");
      }
      if (!rec.contains("version") || rec["version"] != kStoreSchemaVersion) {
        throw ValidationError(where + ": unsupported store version");
      }
      header = false;
      return;
    }
    const std::string kind = string_at(rec, "kind", where);
    if (!rec.contains("embedding")) throw ParseError(where + ": missing embedding");
    try {
      if (kind == "context") {
        store.add_context(string_at(rec, "id", where), string_at(rec, "text", where),
                          vector_from(rec["embedding"], where));
      } else if (kind == "span") {
        store.add_span(string_at(rec, "context_id", where), string_at(rec, "entity_id", where),
                       string_at(rec, "text", where), vector_from(rec["embedding"], where));
      } else {
        throw ParseError(where + ": unknown record kind '" + kind + "'");
      }
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.starts_with(where)) throw;
      throw ValidationError(where + ": " + msg);
    }
  });
  if (header) throw ParseError(path.string() + ": missing schema header");
  return store;
}

ContextStore build_store(const std::vector<extraction::TextUnit>& contexts,
                         const std::vector<extraction::EntityCentricSpan>& spans,
                         providers::EmbedClient& embedder, std::size_t batch) {
  if (batch == 0) throw ValidationError("embedding batch size must be positive");
  const auto embed_all = [&](const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += batch) {
      const std::vector<std::string> chunk(
          texts.begin() + static_cast<std::ptrdiff_t>(i),
          texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
      for (Embedding& e : embedder.embed(chunk)) out.push_back(std::move(e));
    }
    return out;
  };

  std::vector<std::string> texts;
  for (const auto& c : contexts) texts.push_back(c.text);
  std::vector<Embedding> ctx_vecs = embed_all(texts);
  texts.clear();
  for (const auto& s : spans) texts.push_back(s.text);
  std::vector<Embedding> span_vecs = embed_all(texts);

  ContextStore store;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    store.add_context(contexts[i].id, contexts[i].text, std::move(ctx_vecs[i]));
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    store.add_span(spans[i].context_id, spans[i].entity_id, spans[i].text,
                   std::move(span_vecs[i]));
  }
  return store;
}

// --- schedule -----------------------------------------------------------------

SpanWeightSchedule::SpanWeightSchedule(std::vector<Bucket> buckets, double entry_threshold)
    : buckets_(std::move(buckets)), entry_threshold_(entry_threshold) {
  if (buckets_.empty()) throw ValidationError("schedule needs at least one bucket");
  if (!std::isfinite(entry_threshold_) || entry_threshold_ <= 0.0) {
    throw ValidationError("entry threshold must be positive");
  }
  double prev = 0.0;
  for (const Bucket& b : buckets_) {
    if (!std::isfinite(b.upper_bound) || b.upper_bound <= prev) {
      throw ValidationError("schedule bounds must be positive and strictly increasing");
    }
    if (!(b.weight >= 0.0 && b.weight <= 1.0)) {
      throw ValidationError("schedule weights must lie in [0, 1]");
    }
    prev = b.upper_bound;
  }
  if (std::abs(buckets_.back().upper_bound - entry_threshold_) > kScoreTolerance) {
    throw ValidationError("last schedule bound must equal the entry threshold");
  }
}

SpanWeightSchedule SpanWeightSchedule::table_one() {
  return SpanWeightSchedule(
      {{0.01, 0.10}, {0.02, 0.15}, {0.03, 0.20}, {0.04, 0.25}, {0.05, 0.30}}, 0.05);
}

SpanWeightSchedule SpanWeightSchedule::uniform(double weight, double entry_threshold) {
  return SpanWeightSchedule({{entry_threshold, weight}}, entry_threshold);
}

SpanWeightSchedule SpanWeightSchedule::truncated(double threshold) const {
  if (threshold > entry_threshold_ + kScoreTolerance) {
    throw ValidationError("truncated threshold exceeds the schedule's entry threshold");
  }
  const double w = get_span_weight(*this, threshold);
  std::vector<Bucket> kept;
  for (const Bucket& b : buckets_) {
    if (b.upper_bound < threshold - kScoreTolerance) kept.push_back(b);
  }
  kept.push_back({threshold, w});
  return SpanWeightSchedule(std::move(kept), threshold);
}

double get_span_weight(const SpanWeightSchedule& schedule, double score_diff) {
  if (!(score_diff >= -kScoreTolerance) ||
      score_diff > schedule.entry_threshold() + kScoreTolerance) {
    throw ValidationError("score difference " + std::to_string(score_diff) +
                          " outside [0, entry threshold]");
  }
  for (const Bucket& b : schedule.buckets()) {
    if (b.upper_bound + kScoreTolerance >= score_diff) return b.weight;
  }
  return schedule.buckets().back().weight;
}

// --- reranking ----------------------------------------------------------------

bool needs_reweighting(const SpanWeightSchedule& schedule, double s1, double s2) {
  return s1 - s2 < schedule.entry_threshold() - kScoreTolerance;
}

ScoreDecision decide_scores(const SpanWeightSchedule& schedule, double s1, double s2,
                            std::optional<double> es1, std::optional<double> es2) {
  ScoreDecision d;
  d.final1 = s1;
  d.final2 = s2;
  if (!needs_reweighting(schedule, s1, s2) || !es1 || !es2) return d;
  d.reweighted = true;
  d.weight = get_span_weight(schedule, std::max(0.0, s1 - s2));
  const double w = d.weight;
  d.final1 = std::max(s1, s1 * (1.0 - w) + *es1 * w);
  d.final2 = std::max(s2, s2 * (1.0 - w) + *es2 * w);
  d.second_wins = !(d.final1 > d.final2);
  return d;
}

ContextDecision retrieve_context(const ContextStore& store, const SpanWeightSchedule& schedule,
                                 const Embedding& query) {
  if (store.size() < 2) {
    throw ValidationError("context retrieval needs at least 2 contexts, store has " +
                          std::to_string(store.size()));
  }
  const auto& ctx = store.contexts();
  std::size_t first = 0;
  std::size_t second = 0;
  double best = 0.0;
  double runner = 0.0;
  bool have_second = false;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    const double s = dot(query, ctx[i].embedding);
    if (i == 0) {
      first = 0;
      best = s;
    } else if (ranks_before(s, ctx[i].id, best, ctx[first].id)) {
      second = first;
      runner = best;
      have_second = true;
      first = i;
      best = s;
    } else if (!have_second || ranks_before(s, ctx[i].id, runner, ctx[second].id)) {
      second = i;
      runner = s;
      have_second = true;
    }
  }

  ContextDecision out;
  out.top2 = {ctx[first].id, ctx[second].id};
  out.s1 = best;
  out.s2 = runner;
  if (needs_reweighting(schedule, best, runner)) {
    const auto best_span = [&](std::size_t c) -> std::optional<double> {
      const auto& spans = store.spans(c);
      if (spans.empty()) return std::nullopt;
      double m = dot(query, spans.front().embedding);
      for (const SpanRecord& s : spans) m = std::max(m, dot(query, s.embedding));
      return m;
    };
    out.es1 = best_span(first);
    out.es2 = best_span(second);
    out.spans_scored = true;
  }
  out.scores = decide_scores(schedule, best, runner, out.es1, out.es2);
  out.context_id = out.scores.second_wins ? ctx[second].id : ctx[first].id;
  return out;
}

std::vector<RankedContext> baseline_topk(const ContextStore& store, const Embedding& query,
                                         std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  std::vector<RankedContext> all;
  all.reserve(store.size());
  for (const ContextRecord& c : store.contexts()) all.push_back({c.id, dot(query, c.embedding)});
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const RankedContext& a, const RankedContext& b) {
                      return ranks_before(a.score, a.id, b.score, b.id);
                    });
  all.resize(n);
  return all;
}

double precision_at_1(const std::vector<std::pair<std::string, std::string>>& predictions,
                      const std::map<std::string, std::string>& gold) {
  if (predictions.empty()) throw ValidationError("precision@1 is undefined for no predictions");
  std::size_t correct = 0;
  for (const auto& [query, chosen] : predictions) {
    const auto it = gold.find(query);
    if (it == gold.end()) throw ValidationError("no gold context for query '" + query + "'");
    if (it->second == chosen) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace kgrag::retrieval
