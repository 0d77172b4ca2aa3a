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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/jsonl.hpp"
#include "kgrag/linker.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/vocabulary.hpp"

namespace kgrag::extraction {

inline constexpr double kDefaultTheta = 0.95;

// Items discarded while parsing model output. Every parse step reports
// these so nothing is lost silently.
struct DropCounts {
  std::size_t not_in_text = 0;     // span absent from the paragraph
  std::size_t unknown_entity = 0;  // name outside the supplied entity set
  std::size_t self_relation = 0;
  std::size_t duplicate = 0;
  std::size_t malformed = 0;       // wrong field count or empty field
  std::size_t rejected = 0;        // entities the filter prompt did not confirm

  std::size_t total() const {
    return not_in_text + unknown_entity + self_relation + duplicate + malformed +
           rejected;
  }
  DropCounts& operator+=(const DropCounts& o);
  friend bool operator==(const DropCounts&, const DropCounts&) = default;
};

Json to_json(const DropCounts& d);

// Newline-delimited list parsing shared by every list-shaped prompt.
// Bullets ("-", "*", "•") and numbering ("1.", "2)") are stripped, blank
// lines skipped, and a lone NONE (or "[]") means the empty list. A blank
// response raises ParseError carrying the raw text.
std::vector<std::string> parse_list(std::string_view raw);
// Splits a list item on TAB, falling back to " | ".
std::vector<std::string> split_fields(std::string_view item);

struct LlmSpan {
  std::string surface;
  std::string paragraph_path;

  friend bool operator==(const LlmSpan&, const LlmSpan&) = default;
};

struct LlmExtraction {
  std::vector<LlmSpan> spans;
  DropCounts dropped;
};

// One-shot extraction prompt. Spans are kept only if they occur in the
// paragraph (case-insensitive); repeats are dropped.
LlmExtraction llm_extract_entities(std::string_view text, std::string_view path,
                                   providers::ChatClient& chat,
                                   const prompts::PromptLibrary& prompts);
LlmExtraction llm_extract_entities(const corpus::Paragraph& paragraph,
                                   providers::ChatClient& chat,
                                   const prompts::PromptLibrary& prompts);

enum class MapKind { kExact, kSimilar, kNew };

struct MapOutcome {
  std::string entity_id;
  MapKind kind = MapKind::kExact;
  double score = 1.0;
};

// Maps LLM spans to standard entities: exact surface lookup first, then
// the nearest vocabulary surface by cosine; below theta the span becomes a
// new entity. Holds references to the vocabulary and its surface index and
// keeps both in sync when adding. Not thread-safe.
class Disambiguator {
 public:
  Disambiguator(vocab::Vocabulary& vocab, linker::SurfaceIndex& index,
                providers::EmbedClient* embedder, double theta = kDefaultTheta);

  MapOutcome map_to_standard(const LlmSpan& span);
  // Same lookup without adding entities; std::nullopt when nothing clears
  // theta.
  std::optional<MapOutcome> lookup(std::string_view surface);

  const vocab::Vocabulary& vocabulary() const { return vocab_; }
  double theta() const { return theta_; }

 private:
  struct Nearest {
    std::optional<std::size_t> index;
    double score = -1.0;
    std::optional<Embedding> embedding;
  };
  Nearest nearest(const std::string& normalized);

  vocab::Vocabulary& vocab_;
  linker::SurfaceIndex& index_;
  providers::EmbedClient* embedder_;
  double theta_;
};

struct CombineResult {
  std::vector<linker::EntityMention> mentions;
  DropCounts dropped;
};

// Union of linker mentions and mapped LLM spans keyed by entity, confirmed
// by the filter prompt. Linker mentions keep their token ranges; entities
// found only by the LLM get a mention without one. Empty inputs return
// immediately without a model call.
CombineResult combine_and_filter(std::string_view text, std::string_view path,
                                 const std::vector<linker::EntityMention>& el_mentions,
                                 const std::vector<LlmSpan>& llm_spans,
                                 Disambiguator& disambiguator,
                                 providers::ChatClient& chat,
                                 const prompts::PromptLibrary& prompts);

struct EntityRef {
  std::string entity_id;
  std::string name;  // standard name shown to the model

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

struct RelationSpan {
  std::string entity_a;
  std::string entity_b;
  std::string relation_text;
  std::string paragraph_path;

  friend bool operator==(const RelationSpan&, const RelationSpan&) = default;
};

// What a paragraph says about one entity; becomes a DESCRIBES edge.
struct EntityDescription {
  std::string entity_id;
  std::string relation_text;
  std::string paragraph_path;

  friend bool operator==(const EntityDescription&, const EntityDescription&) = default;
};

struct RelationExtraction {
  std::vector<RelationSpan> relations;
  std::vector<EntityDescription> descriptions;
  DropCounts dropped;
};

// Few-shot relation prompt. Lines with three fields are entity-entity
// relations, lines with two fields are single-entity descriptions (at
// most one per entity). `entities` must be non-empty.
RelationExtraction extract_relations(const corpus::Paragraph& paragraph,
                                     const std::vector<EntityRef>& entities,
                                     providers::ChatClient& chat,
                                     const prompts::PromptLibrary& prompts);

struct EntityCentricSpan {
  std::string entity_id;
  std::string context_id;
  std::string text;

  friend bool operator==(const EntityCentricSpan&, const EntityCentricSpan&) = default;
};

struct SpanExtraction {
  std::vector<EntityCentricSpan> spans;
  DropCounts dropped;
};

// At most one span per entity. No model call for an empty entity list.
SpanExtraction extract_entity_spans(std::string_view context_id,
                                    std::string_view context_text,
                                    const std::vector<EntityRef>& entities,
                                    providers::ChatClient& chat,
                                    const prompts::PromptLibrary& prompts);

struct TextUnit {
  std::string id;
  std::string text;

  friend bool operator==(const TextUnit&, const TextUnit&) = default;
};

// Contexts the model answers YES for, in input order. Anything but a
// leading YES/NO raises ParseError.
std::vector<TextUnit> filter_domain(const std::vector<TextUnit>& contexts,
                                    providers::ChatClient& chat,
                                    const prompts::PromptLibrary& prompts);

// filter_domain followed by keeping contexts with at least one extracted
// entity. `count_entities` returns the number of entities in a context.
template <typename CountFn>
std::vector<TextUnit> select_domain_contexts(const std::vector<TextUnit>& contexts,
                                             providers::ChatClient& chat,
                                             const prompts::PromptLibrary& prompts,
                                             CountFn&& count_entities) {
  std::vector<TextUnit> out;
  for (TextUnit& c : filter_domain(contexts, chat, prompts)) {
    if (count_entities(c) > 0) out.push_back(std::move(c));
  }
  return out;
}

struct ExtractorOptions {
  linker::LinkerConfig linker;
  double theta = kDefaultTheta;
  bool use_llm = true;
  bool use_filter = true;
  std::size_t workers = 1;
};

struct ParagraphExtraction {
  std::string paragraph_path;
  std::vector<linker::EntityMention> mentions;
  DropCounts dropped;
};

// The full entity pipeline: linker -> LLM extraction -> mapping -> union ->
// filter. Linking and LLM extraction run in parallel across paragraphs;
// mapping (which may add entities) runs sequentially in paragraph order so
// synthetic ids are deterministic; filtering runs in parallel again.
class EntityExtractor {
 public:
  EntityExtractor(vocab::Vocabulary& vocab, linker::SurfaceIndex& index,
                  ExtractorOptions options, providers::ChatClient* chat,
                  providers::EmbedClient* embedder,
                  const prompts::PromptLibrary& prompts);

  std::vector<ParagraphExtraction> run(const std::vector<corpus::Paragraph>& paragraphs);

  // Entities of a free-standing text (a question). Never adds entities:
  // LLM spans that do not map to the vocabulary are ignored.
  std::vector<std::string> entities_in(std::string_view text);

 private:
  vocab::Vocabulary& vocab_;
  linker::SurfaceIndex& index_;
  ExtractorOptions options_;
  providers::ChatClient* chat_;
  providers::EmbedClient* embedder_;
  const prompts::PromptLibrary& prompts_;
  Disambiguator disambiguator_;
};

// Entities of a mention list in first-seen order, named by standard name.
std::vector<EntityRef> entity_refs(const std::vector<linker::EntityMention>& mentions,
                                   const vocab::Vocabulary& vocab);

Json to_json(const linker::EntityMention& m);
linker::EntityMention mention_from_json(const Json& j);
Json to_json(const RelationSpan& r);
Json to_json(const EntityDescription& d);
Json to_json(const EntityCentricSpan& s);

}  // namespace kgrag::extraction
