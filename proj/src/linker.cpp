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

#include "kgrag/linker.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kgrag/error.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/text.hpp"

namespace kgrag::linker {
namespace {

constexpr std::size_t kEmbedBatch = 512;

// Keeps the better of two scored entities under the retention rule.
bool better(double score, std::string_view id, double best_score,
            std::string_view best_id) {
  if (score != best_score) return score > best_score;
  return id < best_id;
}

std::string strip_edge_punct(std::string_view s) {
  const std::u32string cps = text::decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && text::is_punct(cps[b])) ++b;
  while (e > b && text::is_punct(cps[e - 1])) --e;
  return text::encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::optional<Candidate> best_fuzzy(const NGram& ng, const SurfaceIndex& index,
                                    double alpha) {
  if (const auto exact = index.find_exact(ng.text)) {
    // Surfaces are unique, so an exact hit is the only entity at 1.0.
    return Candidate{ng, index.entity_id(*exact), 1.0};
  }
  const std::u32string cps = text::decode_utf8(ng.text);
  const std::size_t len = cps.size();
  // sim >= alpha requires |len - len'| <= (1 - alpha) * max(len, len'),
  // i.e. len' in [alpha * len, len / alpha]. One unit of slack on each
  // side absorbs floating-point rounding; exact scores are computed below.
  std::size_t lo = 0;
  std::size_t hi = index.max_length();
  if (alpha > 0.0) {
    const double lo_d = std::floor(alpha * static_cast<double>(len)) - 1.0;
    lo = lo_d > 0.0 ? static_cast<std::size_t>(lo_d) : 0;
    const double hi_d = std::ceil(static_cast<double>(len) / alpha) + 1.0;
    if (hi_d < static_cast<double>(hi)) hi = static_cast<std::size_t>(hi_d);
  }
  std::optional<Candidate> best;
  index.for_each_with_length(lo, hi, [&](std::size_t idx, const std::u32string& s) {
    const std::size_t longest = std::max(len, s.size());
    if (longest == 0) return;
    const double budget = std::floor((1.0 - alpha) * static_cast<double>(longest));
    const std::size_t limit = static_cast<std::size_t>(std::max(budget, 0.0)) + 1;
    const auto d = text::edit_distance_within(cps, s, limit);
    if (!d) return;
    const double score =
        1.0 - static_cast<double>(*d) / static_cast<double>(longest);
    if (score < alpha) return;
    const std::string& id = index.entity_id(idx);
    if (!best || better(score, id, best->score, best->entity_id)) {
      best = Candidate{ng, id, score};
    }
  });
  return best;
}

std::optional<Candidate> best_embed(const NGram& ng, const Embedding& v,
                                    const SurfaceIndex& index, double alpha) {
  std::optional<Candidate> best;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const double score = std::clamp(dot(v.values(), index.embedding_row(i)), -1.0, 1.0);
    if (score < alpha) continue;
    const std::string& id = index.entity_id(i);
    if (!best || better(score, id, best->score, best->entity_id)) {
      best = Candidate{ng, id, score};
    }
  }
  return best;
}

}  // namespace

SimFn parse_simfn(std::string_view name) {
  if (name == "fuzzy") return SimFn::kFuzzy;
  if (name == "embed") return SimFn::kEmbed;
  throw ConfigError("unknown simfn '" + std::string(name) + "' (fuzzy|embed)");
}

std::string_view simfn_name(SimFn fn) { return fn == SimFn::kEmbed ? "embed" : "fuzzy"; }

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kFuzzy:
      return "fuzzy";
    case Method::kEmbed:
      return "embed";
    case Method::kLlm:
      return "llm";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "fuzzy") return Method::kFuzzy;
  if (name == "embed") return Method::kEmbed;
  if (name == "llm") return Method::kLlm;
  throw ParseError("unknown mention method '" + std::string(name) + "'");
}

LinkerConfig LinkerConfig::defaults(SimFn fn) {
  LinkerConfig c;
  c.simfn = fn;
  c.alpha = fn == SimFn::kEmbed ? kDefaultAlphaEmbed : kDefaultAlphaFuzzy;
  return c;
}

void LinkerConfig::validate() const {
  if (max_n < 1) throw ConfigError("linker max_n must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("linker alpha must be in [0, 1]");
}

std::vector<NGram> generate_ngrams(const std::vector<corpus::TokenSpan>& tokens,
                                   std::size_t max_n) {
  std::vector<NGram> out;
  const std::size_t n_tokens = tokens.size();
  for (std::size_t start = 0; start < n_tokens; ++start) {
    std::string text;
    for (std::size_t len = 1; len <= max_n && start + len <= n_tokens; ++len) {
      if (len > 1) text.push_back(' ');
      text += tokens[start + len - 1].normalized;
      out.push_back({{start, start + len}, text});
    }
  }
  return out;
}

double entsim_fuzzy(std::string_view a, std::string_view b) {
  return text::normalized_similarity(a, b);
}

double entsim_embed(const Embedding& a, const Embedding& b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

// --- SurfaceIndex -------------------------------------------------------------

SurfaceIndex::SurfaceIndex(const vocab::Vocabulary& vocab) {
  surfaces_.reserve(vocab.entries().size());
  for (const vocab::VocabEntry& e : vocab.entries()) add(e.surface_form, e.entity_id);
}

std::optional<std::size_t> SurfaceIndex::find_exact(std::string_view normalized) const {
  const auto it = exact_.find(std::string(normalized));
  if (it == exact_.end()) return std::nullopt;
  return it->second;
}

void SurfaceIndex::add(std::string normalized_surface, std::string entity_id,
                       std::optional<Embedding> embedding) {
  if (exact_.contains(normalized_surface)) {
    throw ValidationError("surface '" + normalized_surface + "' is already indexed");
  }
  if (dim_ > 0) {
    if (!embedding) {
      throw ValidationError("surface index carries embeddings; '" +
                            normalized_surface + "' needs one");
    }
    if (embedding->dim() != dim_) throw ValidationError("surface embedding dimension mismatch");
  }
  Surface s;
  s.code_points = text::decode_utf8(normalized_surface);
  s.text = std::move(normalized_surface);
  s.entity_id = std::move(entity_id);
  const std::size_t idx = surfaces_.size();
  const std::size_t len = s.code_points.size();
  if (by_length_.size() <= len) by_length_.resize(len + 1);
  by_length_[len].push_back(idx);
  exact_.emplace(s.text, idx);
  surfaces_.push_back(std::move(s));
  if (dim_ > 0) {
    const auto v = embedding->values();
    matrix_.insert(matrix_.end(), v.begin(), v.end());
    ++embedded_;
  }
}

void SurfaceIndex::set_embeddings(const std::vector<Embedding>& embeddings) {
  if (embeddings.size() != surfaces_.size()) {
    throw ValidationError("need one embedding per surface");
  }
  if (embeddings.empty()) return;
  const std::size_t dim = embeddings.front().dim();
  std::vector<float> matrix;
  matrix.reserve(dim * embeddings.size());
  for (const Embedding& e : embeddings) {
    if (e.dim() != dim) throw ValidationError("surface embeddings differ in dimension");
    matrix.insert(matrix.end(), e.values().begin(), e.values().end());
  }
  matrix_ = std::move(matrix);
  dim_ = dim;
  embedded_ = embeddings.size();
}

std::span<const float> SurfaceIndex::embedding_row(std::size_t i) const {
  return std::span<const float>(matrix_).subspan(i * dim_, dim_);
}

void embed_surfaces(SurfaceIndex& index, providers::EmbedClient& client,
                    std::size_t batch) {
  if (batch == 0) batch = 1;
  std::vector<Embedding> all;
  all.reserve(index.size());
  for (std::size_t start = 0; start < index.size(); start += batch) {
    std::vector<std::string> texts;
    for (std::size_t i = start; i < std::min(index.size(), start + batch); ++i) {
      texts.push_back(index.surface(i));
    }
    for (Embedding& e : client.embed(texts)) all.push_back(std::move(e));
  }
  index.set_embeddings(all);
}

// --- matching -------------------------------------------------------------------

std::vector<Candidate> match_candidates(const std::vector<NGram>& ngrams,
                                        const SurfaceIndex& index,
                                        const LinkerConfig& config,
                                        const std::vector<Embedding>* ngram_embeddings) {
  config.validate();
  std::vector<Candidate> out;
  if (config.simfn == SimFn::kEmbed) {
    if (index.size() > 0 && !index.has_embeddings()) {
      throw ValidationError("embed matching needs vocabulary surface embeddings");
    }
    if (ngram_embeddings == nullptr || ngram_embeddings->size() != ngrams.size()) {
      throw ValidationError("embed matching needs one embedding per n-gram");
    }
    for (std::size_t i = 0; i < ngrams.size(); ++i) {
      if (auto c = best_embed(ngrams[i], (*ngram_embeddings)[i], index, config.alpha)) {
        out.push_back(*std::move(c));
      }
    }
    return out;
  }
  for (const NGram& ng : ngrams) {
    if (auto c = best_fuzzy(ng, index, config.alpha)) out.push_back(*std::move(c));
  }
  return out;
}

std::vector<EntityMention> select_mentions(const std::vector<Candidate>& candidates,
                                           std::string_view paragraph_path,
                                           Method method) {
  std::vector<const Candidate*> order;
  order.reserve(candidates.size());
  for (const Candidate& c : candidates) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
    const std::size_t la = a->ngram.range.length();
    const std::size_t lb = b->ngram.range.length();
    if (la != lb) return la > lb;
    if (a->score != b->score) return a->score > b->score;
    return a->ngram.range.begin < b->ngram.range.begin;
  });
  std::vector<const Candidate*> kept;
  for (const Candidate* c : order) {
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const Candidate* k) {
      return k->ngram.range.overlaps(c->ngram.range);
    });
    if (!clash) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate* a, const Candidate* b) {
    return a->ngram.range < b->ngram.range;
  });
  std::vector<EntityMention> out;
  out.reserve(kept.size());
  for (const Candidate* c : kept) {
    out.push_back({std::string(paragraph_path), c->ngram.range, c->ngram.text,
                   c->entity_id, c->score, method});
  }
  return out;
}

std::vector<EntityMention> link_text(std::string_view text, std::string_view path,
                                     const SurfaceIndex& index,
                                     const LinkerConfig& config,
                                     providers::EmbedClient* embedder) {
  const std::vector<corpus::TokenSpan> tokens = corpus::tokenize(text);
  const std::vector<NGram> ngrams = generate_ngrams(tokens, config.max_n);
  if (ngrams.empty()) return {};

  std::vector<Candidate> candidates;
  if (config.simfn == SimFn::kEmbed) {
    if (embedder == nullptr) throw ConfigError("embed linking needs an embedding client");
    // Embed each distinct n-gram text once.
    std::map<std::string, std::size_t> slot;
    std::vector<std::string> unique;
    for (const NGram& ng : ngrams) {
      if (slot.emplace(ng.text, unique.size()).second) unique.push_back(ng.text);
    }
    std::vector<Embedding> unique_vecs;
    unique_vecs.reserve(unique.size());
    for (std::size_t start = 0; start < unique.size(); start += kEmbedBatch) {
      const std::vector<std::string> chunk(
          unique.begin() + static_cast<std::ptrdiff_t>(start),
          unique.begin() + static_cast<std::ptrdiff_t>(std::min(unique.size(), start + kEmbedBatch)));
      for (Embedding& e : embedder->embed(chunk)) unique_vecs.push_back(std::move(e));
    }
    std::vector<Embedding> vecs;
    vecs.reserve(ngrams.size());
    for (const NGram& ng : ngrams) vecs.push_back(unique_vecs[slot.at(ng.text)]);
    candidates = match_candidates(ngrams, index, config, &vecs);
  } else {
    candidates = match_candidates(ngrams, index, config);
  }

  const Method method = config.simfn == SimFn::kEmbed ? Method::kEmbed : Method::kFuzzy;
  std::vector<EntityMention> mentions = select_mentions(candidates, path, method);
  for (EntityMention& m : mentions) {
    const std::size_t from = tokens[m.token_range->begin].start_char;
    const std::size_t to = tokens[m.token_range->end - 1].end_char;
    m.surface = strip_edge_punct(text.substr(from, to - from));
  }
  return mentions;
}

std::vector<EntityMention> link_entities(const corpus::Paragraph& paragraph,
                                         const SurfaceIndex& index,
                                         const LinkerConfig& config,
                                         providers::EmbedClient* embedder) {
  return link_text(paragraph.text, paragraph.path, index, config, embedder);
}

}  // namespace kgrag::linker
