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

#include "kgrag/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "kgrag/error.hpp"
#include "kgrag/parallel.hpp"
#include "kgrag/text.hpp"

namespace kgrag::extraction {
namespace {

using linker::EntityMention;

bool bullet_char(char32_t c) {
  return c == '-' || c == '*' || c == 0x2022 || c == 0x2013 || c == 0x2014;
}

std::string strip_item_prefix(std::string_view line) {
  std::string s = text::trim(line);
  // Numbering: "12." / "12)"
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')') &&
      (digits + 1 == s.size() || s[digits + 1] == ' ' || s[digits + 1] == '\t')) {
    return text::trim(std::string_view(s).substr(digits + 1));
  }
  std::size_t pos = 0;
  if (!s.empty()) {
    const char32_t c = text::next_code_point(s, pos);
    if (bullet_char(c) && (pos == s.size() || s[pos] == ' ' || s[pos] == '\t')) {
      return text::trim(std::string_view(s).substr(pos));
    }
  }
  return s;
}

bool is_none_marker(std::string_view item) {
  const std::string up = text::to_lower(text::trim(item));
  return up == "none" || up == "none." || up == "[]";
}

std::string contains_key(std::string_view s) { return text::to_lower(s); }

// Normalized name -> entity id for the names a prompt showed the model.
class NameTable {
 public:
  void add(std::string_view name, const std::string& id) {
    const std::string key = corpus::normalize_surface(name);
    if (!key.empty()) table_.emplace(key, id);
  }
  std::optional<std::string> find(std::string_view name) const {
    const auto it = table_.find(corpus::normalize_surface(name));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::string> table_;
};

std::string bullet_lines(const std::vector<EntityRef>& entities) {
  std::string out;
  for (const EntityRef& e : entities) {
    if (!out.empty()) out.push_back('\n');
    out += e.name;
  }
  return out;
}

NameTable names_of(const std::vector<EntityRef>& entities) {
  NameTable t;
  for (const EntityRef& e : entities) t.add(e.name, e.entity_id);
  return t;
}

struct MappedSpan {
  LlmSpan span;
  MapOutcome outcome;
};

const std::string& standard_name(const vocab::Vocabulary& vocab, const std::string& id) {
  const std::string* name = vocab.standard_name_for_id(id);
  if (name == nullptr) throw ValidationError("unknown entity id '" + id + "'");
  return *name;
}

// Union keyed by entity (linker mentions first), optionally confirmed by
// the filter prompt.
CombineResult combine_mapped(std::string_view text, std::string_view path,
                             const std::vector<EntityMention>& el_mentions,
                             const std::vector<MappedSpan>& mapped,
                             const vocab::Vocabulary& vocab,
                             providers::ChatClient* chat,
                             const prompts::PromptLibrary& prompts, bool filter) {
  struct Item {
    std::string entity_id;
    bool from_el = false;
    std::optional<EntityMention> llm;
  };
  std::vector<Item> items;
  std::unordered_map<std::string, std::size_t> pos;
  NameTable names;
  for (const EntityMention& m : el_mentions) {
    auto [it, fresh] = pos.emplace(m.entity_id, items.size());
    if (fresh) items.push_back({m.entity_id, true, std::nullopt});
    names.add(m.surface, m.entity_id);
  }
  for (const MappedSpan& ms : mapped) {
    const std::string& id = ms.outcome.entity_id;
    names.add(ms.span.surface, id);
    if (pos.contains(id)) continue;
    pos.emplace(id, items.size());
    items.push_back({id, false,
                     EntityMention{std::string(path), std::nullopt, ms.span.surface, id,
                                   ms.outcome.score, linker::Method::kLlm}});
  }
  CombineResult result;
  if (items.empty()) return result;

  std::set<std::string> confirmed;
  if (filter) {
    std::vector<EntityRef> refs;
    for (const Item& item : items) {
      refs.push_back({item.entity_id, standard_name(vocab, item.entity_id)});
      names.add(refs.back().name, item.entity_id);
    }
    if (chat == nullptr) throw ConfigError("entity filtering needs a chat client");
    const std::string raw = chat->chat(providers::user_prompt(prompts.render(
        prompts::kFilterEntities,
        {{"text", std::string(text)}, {"entities", bullet_lines(refs)}})));
    for (const std::string& name : parse_list(raw)) {
      const auto id = names.find(name);
      if (!id) {
        ++result.dropped.unknown_entity;
      } else if (!confirmed.insert(*id).second) {
        ++result.dropped.duplicate;
      }
    }
    result.dropped.rejected = items.size() - confirmed.size();
  } else {
    for (const Item& item : items) confirmed.insert(item.entity_id);
  }

  for (const EntityMention& m : el_mentions) {
    if (confirmed.contains(m.entity_id)) result.mentions.push_back(m);
  }
  std::stable_sort(result.mentions.begin(), result.mentions.end(),
                   [](const EntityMention& a, const EntityMention& b) {
                     return a.token_range < b.token_range;
                   });
  for (const Item& item : items) {
    if (!item.from_el && confirmed.contains(item.entity_id)) {
      result.mentions.push_back(*item.llm);
    }
  }
  return result;
}

}  // namespace

DropCounts& DropCounts::operator+=(const DropCounts& o) {
  not_in_text += o.not_in_text;
  unknown_entity += o.unknown_entity;
  self_relation += o.self_relation;
  duplicate += o.duplicate;
  malformed += o.malformed;
  rejected += o.rejected;
  return *this;
}

Json to_json(const DropCounts& d) {
  return Json{{"not_in_text", d.not_in_text}, {"unknown_entity", d.unknown_entity},
              {"self_relation", d.self_relation}, {"duplicate", d.duplicate},
              {"malformed", d.malformed},       {"rejected", d.rejected}};
}

std::vector<std::string> parse_list(std::string_view raw) {
  if (text::trim(raw).empty()) {
    throw ParseError("model returned an empty response where a list was expected: '" +
                     std::string(raw) + "'");
  }
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string item = strip_item_prefix(raw.substr(pos, nl - pos));
    pos = nl + 1;
    if (item.empty()) continue;
    items.push_back(std::move(item));
  }
  if (items.size() == 1 && is_none_marker(items.front())) return {};
  return items;
}

std::vector<std::string> split_fields(std::string_view item) {
  std::vector<std::string> fields;
  const bool tabs = item.find('\t') != std::string_view::npos;
  const std::string_view sep = tabs ? "\t" : " | ";
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = item.find(sep, pos);
    fields.push_back(text::trim(item.substr(pos, at == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : at - pos)));
    if (at == std::string_view::npos) break;
    pos = at + sep.size();
  }
  return fields;
}

// --- LLM extraction -------------------------------------------------------------

LlmExtraction llm_extract_entities(std::string_view text, std::string_view path,
                                   providers::ChatClient& chat,
                                   const prompts::PromptLibrary& prompts) {
  const std::string raw = chat.chat(providers::user_prompt(
      prompts.render(prompts::kExtractEntities, {{"text", std::string(text)}})));
  LlmExtraction out;
  const std::string haystack = contains_key(text);
  std::set<std::string> seen;
  for (const std::string& item : parse_list(raw)) {
    const std::string key = contains_key(item);
    if (haystack.find(key) == std::string::npos) {
      ++out.dropped.not_in_text;
      continue;
    }
    if (!seen.insert(corpus::normalize_surface(item)).second) {
      ++out.dropped.duplicate;
      continue;
    }
    out.spans.push_back({item, std::string(path)});
  }
  return out;
}

LlmExtraction llm_extract_entities(const corpus::Paragraph& paragraph,
                                   providers::ChatClient& chat,
                                   const prompts::PromptLibrary& prompts) {
  return llm_extract_entities(paragraph.text, paragraph.path, chat, prompts);
}

// --- Disambiguator --------------------------------------------------------------

Disambiguator::Disambiguator(vocab::Vocabulary& vocab, linker::SurfaceIndex& index,
                             providers::EmbedClient* embedder, double theta)
    : vocab_(vocab), index_(index), embedder_(embedder), theta_(theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw ConfigError("theta must be in [-1, 1]");
}

Disambiguator::Nearest Disambiguator::nearest(const std::string& normalized) {
  Nearest best;
  if (embedder_ == nullptr) return best;
  if (index_.size() > 0 && !index_.has_embeddings()) {
    linker::embed_surfaces(index_, *embedder_);
  }
  best.embedding = embedder_->embed({normalized}).front();
  for (std::size_t i = 0; i < index_.size(); ++i) {
    const double s =
        std::clamp(dot(best.embedding->values(), index_.embedding_row(i)), -1.0, 1.0);
    if (!best.index || s > best.score ||
        (s == best.score && index_.entity_id(i) < index_.entity_id(*best.index))) {
      best.index = i;
      best.score = s;
    }
  }
  return best;
}

std::optional<MapOutcome> Disambiguator::lookup(std::string_view surface) {
  const std::string normalized = corpus::normalize_surface(surface);
  if (normalized.empty()) return std::nullopt;
  if (const auto hit = index_.find_exact(normalized)) {
    return MapOutcome{index_.entity_id(*hit), MapKind::kExact, 1.0};
  }
  const Nearest n = nearest(normalized);
  if (n.index && n.score >= theta_) {
    return MapOutcome{index_.entity_id(*n.index), MapKind::kSimilar, n.score};
  }
  return std::nullopt;
}

MapOutcome Disambiguator::map_to_standard(const LlmSpan& span) {
  const std::string normalized = corpus::normalize_surface(span.surface);
  if (normalized.empty()) {
    throw ValidationError("cannot map an empty span ('" + span.surface + "')");
  }
  if (const auto hit = index_.find_exact(normalized)) {
    return {index_.entity_id(*hit), MapKind::kExact, 1.0};
  }
  Nearest n = nearest(normalized);
  if (n.index && n.score >= theta_) {
    return {index_.entity_id(*n.index), MapKind::kSimilar, n.score};
  }
  const std::string id = vocab_.add_entity(span.surface);
  if (index_.dim() > 0) {
    index_.add(normalized, id, std::move(n.embedding));
  } else {
    index_.add(normalized, id);
  }
  return {id, MapKind::kNew, 1.0};
}

// --- combine & filter -------------------------------------------------------------

CombineResult combine_and_filter(std::string_view text, std::string_view path,
                                 const std::vector<EntityMention>& el_mentions,
                                 const std::vector<LlmSpan>& llm_spans,
                                 Disambiguator& disambiguator,
                                 providers::ChatClient& chat,
                                 const prompts::PromptLibrary& prompts) {
  std::vector<MappedSpan> mapped;
  mapped.reserve(llm_spans.size());
  for (const LlmSpan& s : llm_spans) mapped.push_back({s, disambiguator.map_to_standard(s)});
  return combine_mapped(text, path, el_mentions, mapped, disambiguator.vocabulary(),
                        &chat, prompts, true);
}

// --- relations --------------------------------------------------------------------

RelationExtraction extract_relations(const corpus::Paragraph& paragraph,
                                     const std::vector<EntityRef>& entities,
                                     providers::ChatClient& chat,
                                     const prompts::PromptLibrary& prompts) {
  if (entities.empty()) {
    throw ValidationError("extract_relations needs at least one entity");
  }
  const std::string raw = chat.chat(providers::user_prompt(prompts.render(
      prompts::kExtractRelations,
      {{"text", paragraph.text}, {"entities", bullet_lines(entities)}})));
  const NameTable names = names_of(entities);
  RelationExtraction out;
  std::set<std::tuple<std::string, std::string, std::string>> seen_relations;
  std::set<std::string> described;
  for (const std::string& item : parse_list(raw)) {
    const std::vector<std::string> f = split_fields(item);
    if (f.size() == 3 && !f[0].empty() && !f[1].empty() && !f[2].empty()) {
      const auto a = names.find(f[0]);
      const auto b = names.find(f[1]);
      if (!a || !b) {
        ++out.dropped.unknown_entity;
      } else if (*a == *b) {
        ++out.dropped.self_relation;
      } else if (!seen_relations.emplace(*a, *b, f[2]).second) {
        ++out.dropped.duplicate;
      } else {
        out.relations.push_back({*a, *b, f[2], paragraph.path});
      }
    } else if (f.size() == 2 && !f[0].empty() && !f[1].empty()) {
      const auto a = names.find(f[0]);
      if (!a) {
        ++out.dropped.unknown_entity;
      } else if (!described.insert(*a).second) {
        ++out.dropped.duplicate;
      } else {
        out.descriptions.push_back({*a, f[1], paragraph.path});
      }
    } else {
      ++out.dropped.malformed;
    }
  }
  return out;
}

// --- entity-centric spans ---------------------------------------------------------

SpanExtraction extract_entity_spans(std::string_view context_id,
                                    std::string_view context_text,
                                    const std::vector<EntityRef>& entities,
                                    providers::ChatClient& chat,
                                    const prompts::PromptLibrary& prompts) {
  SpanExtraction out;
  if (entities.empty()) return out;
  const std::string raw = chat.chat(providers::user_prompt(prompts.render(
      prompts::kExtractEntitySpans,
      {{"text", std::string(context_text)}, {"entities", bullet_lines(entities)}})));
  const NameTable names = names_of(entities);
  std::set<std::string> covered;
  for (const std::string& item : parse_list(raw)) {
    const std::vector<std::string> f = split_fields(item);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      ++out.dropped.malformed;
      continue;
    }
    const auto id = names.find(f[0]);
    if (!id) {
      ++out.dropped.unknown_entity;
    } else if (!covered.insert(*id).second) {
      ++out.dropped.duplicate;
    } else {
      out.spans.push_back({*id, std::string(context_id), f[1]});
    }
  }
  return out;
}

// --- domain filter ----------------------------------------------------------------

std::vector<TextUnit> filter_domain(const std::vector<TextUnit>& contexts,
                                    providers::ChatClient& chat,
                                    const prompts::PromptLibrary& prompts) {
  std::vector<TextUnit> out;
  for (const TextUnit& c : contexts) {
    const std::string raw = chat.chat(providers::user_prompt(
        prompts.render(prompts::kFilterDomain, {{"text", c.text}})));
    std::string word;
    for (char ch : text::trim(raw)) {
      if (!std::isalpha(static_cast<unsigned char>(ch))) break;
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (word == "yes") {
      out.push_back(c);
    } else if (word != "no") {
      throw ParseError("domain filter answer is neither YES nor NO: '" + raw + "'");
    }
  }
  return out;
}

// --- pipeline ---------------------------------------------------------------------

EntityExtractor::EntityExtractor(vocab::Vocabulary& vocab, linker::SurfaceIndex& index,
                                 ExtractorOptions options, providers::ChatClient* chat,
                                 providers::EmbedClient* embedder,
                                 const prompts::PromptLibrary& prompts)
    : vocab_(vocab),
      index_(index),
      options_(std::move(options)),
      chat_(chat),
      embedder_(embedder),
      prompts_(prompts),
      disambiguator_(vocab, index, embedder, options_.theta) {
  options_.linker.validate();
  if ((options_.use_llm || options_.use_filter) && chat_ == nullptr) {
    throw ConfigError("LLM extraction and filtering need a chat client");
  }
  if (options_.linker.simfn == linker::SimFn::kEmbed && embedder_ == nullptr) {
    throw ConfigError("embed linking needs an embedding client");
  }
}

std::vector<ParagraphExtraction> EntityExtractor::run(
    const std::vector<corpus::Paragraph>& paragraphs) {
  const std::size_t n = paragraphs.size();
  if (options_.linker.simfn == linker::SimFn::kEmbed && index_.size() > 0 &&
      !index_.has_embeddings()) {
    linker::embed_surfaces(index_, *embedder_);
  }

  std::vector<std::vector<EntityMention>> el(n);
  std::vector<LlmExtraction> llm(n);
  parallel_for(n, options_.workers, [&](std::size_t i) {
    el[i] = linker::link_entities(paragraphs[i], index_, options_.linker, embedder_);
    if (options_.use_llm) llm[i] = llm_extract_entities(paragraphs[i], *chat_, prompts_);
  });

  std::vector<std::vector<MappedSpan>> mapped(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const LlmSpan& s : llm[i].spans) {
      mapped[i].push_back({s, disambiguator_.map_to_standard(s)});
    }
  }

  std::vector<ParagraphExtraction> out(n);
  parallel_for(n, options_.workers, [&](std::size_t i) {
    CombineResult r = combine_mapped(paragraphs[i].text, paragraphs[i].path, el[i],
                                     mapped[i], vocab_, chat_, prompts_,
                                     options_.use_filter);
    out[i].paragraph_path = paragraphs[i].path;
    out[i].mentions = std::move(r.mentions);
    out[i].dropped = llm[i].dropped;
    out[i].dropped += r.dropped;
  });
  return out;
}

std::vector<std::string> EntityExtractor::entities_in(std::string_view text) {
  const std::vector<EntityMention> el =
      linker::link_text(text, "", index_, options_.linker, embedder_);
  std::vector<MappedSpan> mapped;
  if (options_.use_llm) {
    for (const LlmSpan& s : llm_extract_entities(text, "", *chat_, prompts_).spans) {
      if (auto outcome = disambiguator_.lookup(s.surface)) {
        mapped.push_back({s, *std::move(outcome)});
      }
    }
  }
  const CombineResult r = combine_mapped(text, "", el, mapped, vocab_, chat_, prompts_,
                                         options_.use_filter);
  std::vector<std::string> ids;
  for (const EntityMention& m : r.mentions) {
    if (std::find(ids.begin(), ids.end(), m.entity_id) == ids.end()) {
      ids.push_back(m.entity_id);
    }
  }
  return ids;
}

std::vector<EntityRef> entity_refs(const std::vector<EntityMention>& mentions,
                                   const vocab::Vocabulary& vocab) {
  std::vector<EntityRef> out;
  std::set<std::string> seen;
  for (const EntityMention& m : mentions) {
    if (seen.insert(m.entity_id).second) {
      out.push_back({m.entity_id, standard_name(vocab, m.entity_id)});
    }
  }
  return out;
}

// --- serialization ----------------------------------------------------------------

Json to_json(const EntityMention& m) {
  Json j{{"entity_id", m.entity_id},
         {"surface", m.surface},
         {"score", m.score},
         {"method", linker::method_name(m.method)}};
  if (m.token_range) {
    j["token_range"] = {m.token_range->begin, m.token_range->end};
  } else {
    j["token_range"] = nullptr;
  }
  if (!m.paragraph_path.empty()) j["paragraph_path"] = m.paragraph_path;
  return j;
}

EntityMention mention_from_json(const Json& j) {
  try {
    EntityMention m;
    m.entity_id = j.at("entity_id").get<std::string>();
    m.surface = j.at("surface").get<std::string>();
    m.score = j.at("score").get<double>();
    m.method = linker::parse_method(j.at("method").get<std::string>());
    m.paragraph_path = j.value("paragraph_path", std::string());
    if (j.contains("token_range") && !j["token_range"].is_null()) {
      m.token_range = linker::TokenRange{j["token_range"].at(0).get<std::size_t>(),
                                         j["token_range"].at(1).get<std::size_t>()};
    }
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad mention record: ") + e.what());
  }
}

Json to_json(const RelationSpan& r) {
  return Json{{"entity_a", r.entity_a},
              {"entity_b", r.entity_b},
              {"relation_text", r.relation_text},
              {"paragraph_path", r.paragraph_path}};
}

Json to_json(const EntityDescription& d) {
  return Json{{"entity_id", d.entity_id},
              {"relation_text", d.relation_text},
              {"paragraph_path", d.paragraph_path}};
}

Json to_json(const EntityCentricSpan& s) {
  return Json{{"entity_id", s.entity_id}, {"context_id", s.context_id}, {"text", s.text}};
}

}  // namespace kgrag::extraction
