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

#include "kgrag/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "kgrag/config.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"
#include "kgrag/eval.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/jsonl.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/linker.hpp"
#include "kgrag/parallel.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/references.hpp"
#include "kgrag/retrieval.hpp"
#include "kgrag/subgraph.hpp"
#include "kgrag/vocabulary.hpp"

namespace kgrag::cli {
namespace {

namespace fs = std::filesystem;
using providers::ChatClient;
using providers::EmbedClient;

// --- intermediate files -------------------------------------------------------

Json paragraph_json(const corpus::Paragraph& p) {
  return {{"para_id", p.para_id}, {"doc_id", p.doc_id}, {"section_label", p.section_label},
          {"index", p.index},     {"path", p.path},     {"text", p.text}};
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<corpus::Paragraph> load_paragraphs(const fs::path& path) {
  config::require_file(path, "paragraph file");
  std::vector<corpus::Paragraph> out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      corpus::Paragraph p;
      p.para_id = j.at("para_id").get<std::string>();
      p.doc_id = j.at("doc_id").get<std::string>();
      p.section_label = j.at("section_label").get<std::string>();
      p.index = j.at("index").get<std::size_t>();
      p.path = j.at("path").get<std::string>();
      p.text = j.at("text").get<std::string>();
      out.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad paragraph record: " + e.what());
    }
  });
  return out;
}

struct MentionFile {
  std::vector<linker::EntityMention> mentions;
  std::map<std::string, std::vector<linker::EntityMention>> by_paragraph;
};

MentionFile load_mentions(const fs::path& path) {
  config::require_file(path, "mention file");
  MentionFile out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      const std::string para = j.at("paragraph_path").get<std::string>();
      auto& slot = out.by_paragraph[para];
      for (const Json& m : j.at("mentions")) {
        linker::EntityMention mention = extraction::mention_from_json(m);
        if (mention.paragraph_path.empty()) mention.paragraph_path = para;
        slot.push_back(mention);
        out.mentions.push_back(std::move(mention));
      }
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad mention record: " + e.what());
    }
  });
  return out;
}

struct RelationFile {
  std::vector<extraction::RelationSpan> relations;
  std::vector<extraction::EntityDescription> descriptions;
};

RelationFile load_relations(const fs::path& path) {
  config::require_file(path, "relation file");
  RelationFile out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "relation") {
        out.relations.push_back({j.at("entity_a").get<std::string>(),
                                 j.at("entity_b").get<std::string>(),
                                 j.at("relation_text").get<std::string>(),
                                 j.at("paragraph_path").get<std::string>()});
      } else if (kind == "description") {
        out.descriptions.push_back({j.at("entity_id").get<std::string>(),
                                    j.at("relation_text").get<std::string>(),
                                    j.at("paragraph_path").get<std::string>()});
      } else if (kind != "dropped") {
        throw ParseError(where(path, line) + ": unknown record kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad relation record: " + e.what());
    }
  });
  return out;
}

struct Question {
  std::string id;
  std::string question;
  std::optional<std::string> gold;
};

std::vector<Question> load_questions(const fs::path& path) {
  config::require_file(path, "question file");
  std::vector<Question> out;
  std::set<std::string> ids;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      Question q;
      q.id = j.at("id").get<std::string>();
      q.question = j.at("question").get<std::string>();
      if (j.contains("gold") && !j["gold"].is_null()) q.gold = j["gold"].get<std::string>();
      if (!ids.insert(q.id).second) {
        throw ValidationError(where(path, line) + ": duplicate question id '" + q.id + "'");
      }
      out.push_back(std::move(q));
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad question record: " + e.what());
    }
  });
  return out;
}

std::vector<extraction::TextUnit> load_contexts(const fs::path& path) {
  config::require_file(path, "context file");
  std::vector<extraction::TextUnit> out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad context record: " + e.what());
    }
  });
  return out;
}

void write_json(const fs::path& path, const Json& j) { io::write_file(path, j.dump(2) + "\n"); }

std::vector<Embedding> embed_batched(EmbedClient& embedder, const std::vector<std::string>& texts,
                                     std::size_t batch = 256) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < texts.size(); i += batch) {
    const std::vector<std::string> chunk(
        texts.begin() + static_cast<std::ptrdiff_t>(i),
        texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
    for (Embedding& e : embedder.embed(chunk)) out.push_back(std::move(e));
  }
  return out;
}

// --- session ----------------------------------------------------------------

class Session {
 public:
  Session(config::RunConfig cfg, const Transports& transports, std::ostream& out)
      : cfg(std::move(cfg)),
        prompts(this->cfg.prompts_dir.empty()
                    ? prompts::PromptLibrary::builtin()
                    : prompts::PromptLibrary::with_overrides(this->cfg.prompts_dir)),
        out(out),
        transports_(transports) {}

  ChatClient& chat() {
    if (!chat_) chat_ = std::make_unique<ChatClient>(cfg.chat, transports_.chat);
    return *chat_;
  }

  EmbedClient& embed() {
    if (!embed_) embed_ = std::make_unique<EmbedClient>(cfg.embed, transports_.embed);
    return *embed_;
  }

  bool chat_configured() const {
    return chat_ || !cfg.chat.model_id.empty() || !cfg.chat.fixture_path.empty() ||
           !cfg.chat.endpoint.empty();
  }
  ChatClient* chat_if_configured() { return chat_configured() ? &chat() : nullptr; }

  bool embed_configured() const {
    return embed_ || !cfg.embed.model_id.empty() || !cfg.embed.fixture_path.empty() ||
           !cfg.embed.endpoint.empty();
  }
  EmbedClient* embed_if_configured() { return embed_configured() ? &embed() : nullptr; }

  eval::BiblioClient& biblio() {
    if (!biblio_) {
      if (cfg.biblio.kind == "fixture") {
        config::require_file(cfg.biblio.database, "biblio.database");
        biblio_ = std::make_unique<eval::FixtureBiblio>(
            eval::FixtureBiblio::load(cfg.biblio.database));
      } else {
        auto s2 = std::make_unique<eval::SemanticScholarBiblio>(cfg.biblio.provider,
                                                                transports_.biblio);
        s2_ = s2.get();
        biblio_ = std::move(s2);
      }
    }
    return *biblio_;
  }

  fs::path path(const std::string& name) const { return cfg.output_dir / name; }

  // File the command wrote, reported relative to the output directory.
  void produced(const fs::path& p) {
    const auto rel = p.lexically_relative(cfg.output_dir);
    outputs_.push_back(rel.empty() || rel.native().starts_with("..") ? p.string()
                                                                     : rel.generic_string());
  }

  void save_fixtures() {
    if (chat_) chat_->save_fixtures();
    if (embed_) embed_->save_fixtures();
    if (s2_ != nullptr) s2_->save_fixtures();
  }

  void finish(const std::string& command) {
    save_fixtures();
    Json providers = Json::object();
    const auto stats = [](const providers::ProviderClient& c) {
      return Json{{"mode", providers::mode_name(c.config().mode)},
                  {"model", c.config().model_id},
                  {"live_calls", c.live_calls()},
                  {"fixture_hits", c.fixture_hits()}};
    };
    if (chat_) providers["chat"] = stats(*chat_);
    if (embed_) providers["embed"] = stats(*embed_);
    if (s2_ != nullptr) providers["biblio"] = stats(*s2_);
    Json meta{{"command", command},
              {"config_hash", cfg.hash},
              {"mode", providers::mode_name(cfg.mode)},
              {"defaults_used", cfg.defaults_used},
              {"parameters", parameters()},
              {"counters", counters},
              {"providers", providers},
              {"outputs", outputs_}};
    std::string file = command;
    std::replace(file.begin(), file.end(), ' ', '-');
    write_json(path("runs/" + file + ".json"), meta);
  }

  Json parameters() const {
    return {{"alpha", cfg.linker.alpha},
            {"max_n", cfg.linker.max_n},
            {"simfn", linker::simfn_name(cfg.linker.simfn)},
            {"theta", cfg.theta},
            {"k", cfg.k},
            {"schedule", config::format_buckets(cfg.schedule.buckets())},
            {"entry_threshold", cfg.schedule.entry_threshold()}};
  }

  extraction::ExtractorOptions extractor_options() const {
    extraction::ExtractorOptions o;
    o.linker = cfg.linker;
    o.theta = cfg.theta;
    o.use_llm = cfg.use_llm;
    o.use_filter = cfg.use_filter;
    o.workers = cfg.workers;
    return o;
  }

  // The vocabulary after extraction when one exists, else the configured one.
  fs::path working_vocabulary(const std::string& flag) const {
    if (!flag.empty()) return flag;
    const fs::path augmented = path("vocabulary.augmented.jsonl");
    if (fs::exists(augmented)) return augmented;
    return cfg.vocabulary;
  }

  config::RunConfig cfg;
  prompts::PromptLibrary prompts;
  std::ostream& out;
  Json counters = Json::object();

 private:
  Transports transports_;
  std::unique_ptr<ChatClient> chat_;
  std::unique_ptr<EmbedClient> embed_;
  std::unique_ptr<eval::BiblioClient> biblio_;
  eval::SemanticScholarBiblio* s2_ = nullptr;
  std::vector<std::string> outputs_;
};

fs::path or_default(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

vocab::Vocabulary open_vocabulary(const fs::path& path) {
  config::require_file(path, "vocabulary");
  return vocab::load_vocabulary(path);
}

// --- vocab ------------------------------------------------------------------

struct VocabArgs {
  std::string ontology, source = "ontology", on_conflict = "error", stopwords, in, out;
  bool dry_run = false;
};

void vocab_build(Session& s, const VocabArgs& a) {
  config::require_file(a.ontology, "ontology export");
  const fs::path out = or_default(a.out, s.cfg.vocabulary);
  if (out.empty()) throw ConfigError("vocab build needs --out or run.vocabulary");
  if (a.on_conflict != "error" && a.on_conflict != "first") {
    throw ConfigError("--on-conflict must be 'error' or 'first'");
  }
  std::vector<vocab::VocabEntry> dropped;
  const auto v = vocab::Vocabulary::from_entries(
      vocab::build_from_ontology(a.ontology, a.source),
      a.on_conflict == "first" ? vocab::ConflictPolicy::kKeepFirst
                               : vocab::ConflictPolicy::kReject,
      &dropped);
  vocab::save_vocabulary(v, out);
  s.produced(out);
  s.counters["entries"] = v.entries().size();
  s.counters["entities"] = v.entity_count();
  s.counters["dropped_conflicts"] = dropped.size();
  s.out << "vocabulary: " << v.entity_count() << " entities, " << v.entries().size()
        << " surfaces, " << dropped.size() << " conflicting surfaces dropped\n";
  for (const auto& d : dropped) {
    s.out << "  dropped '" << d.surface_form << "' (" << d.entity_id << ")\n";
  }
}

void vocab_clean(Session& s, const VocabArgs& a) {
  config::require_file(a.stopwords, "stopword list");
  const fs::path in = or_default(a.in, s.cfg.vocabulary);
  const fs::path out = or_default(a.out, s.path("vocabulary.clean.jsonl"));
  vocab::CleanReport report;
  const auto cleaned =
      vocab::clean_vocabulary(open_vocabulary(in), vocab::load_stopwords(a.stopwords), &report);
  if (!a.dry_run) {
    vocab::save_vocabulary(cleaned, out);
    s.produced(out);
  }
  s.counters["dropped"] = report.dropped.size();
  s.counters["flagged_preferred"] = report.flagged_preferred.size();
  s.out << (a.dry_run ? "would remove " : "removed ") << report.dropped.size()
        << " stopword surfaces\n";
  if (a.dry_run) {
    for (const auto& d : report.dropped) {
      s.out << "  '" << d.surface_form << "' (" << d.entity_id << ")\n";
    }
  }
  for (const auto& f : report.flagged_preferred) {
    s.out << "  kept preferred stopword '" << f.surface_form << "' (" << f.entity_id << ")\n";
  }
}

void vocab_stats(Session& s, const VocabArgs& a) {
  const auto v = open_vocabulary(or_default(a.in, s.cfg.vocabulary));
  std::map<std::string, std::size_t> by_source;
  std::size_t synthetic = 0;
  for (const auto& e : v.entries()) ++by_source[e.source];
  for (const auto& id : v.entity_ids()) synthetic += id.starts_with(vocab::kSyntheticPrefix);
  s.counters["entries"] = v.entries().size();
  s.counters["entities"] = v.entity_count();
  s.counters["synthetic_entities"] = synthetic;
  s.out << "entities\t" << v.entity_count() << "\n"
        << "surfaces\t" << v.entries().size() << "\n"
        << "synthetic\t" << synthetic << "\n";
  for (const auto& [src, n] : by_source) s.out << "source:" << src << "\t" << n << "\n";
}

// --- corpus -----------------------------------------------------------------

struct CorpusArgs {
  std::string corpus, out;
};

void corpus_ingest(Session& s, const CorpusArgs& a) {
  const fs::path in = or_default(a.corpus, s.cfg.corpus);
  config::require_file(in, "corpus");
  const fs::path out = or_default(a.out, s.path("paragraphs.jsonl"));
  const auto docs = corpus::ingest_corpus(in);
  std::vector<Json> records;
  for (const auto& d : docs) {
    for (const auto& p : corpus::split_paragraphs(d)) records.push_back(paragraph_json(p));
  }
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["documents"] = docs.size();
  s.counters["paragraphs"] = records.size();
  s.out << docs.size() << " documents, " << records.size() << " paragraphs\n";
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::string paragraphs, mentions, vocab, out, vocab_out, contexts, store_out;
  bool no_llm = false, no_filter = false, domain_filter = false;
};

void extract_entities(Session& s, const ExtractArgs& a) {
  const auto paragraphs = load_paragraphs(or_default(a.paragraphs, s.path("paragraphs.jsonl")));
  auto vocab = open_vocabulary(or_default(a.vocab, s.cfg.vocabulary));
  auto opts = s.extractor_options();
  if (a.no_llm) opts.use_llm = false;
  if (a.no_filter) opts.use_filter = false;
  linker::SurfaceIndex index(vocab);
  const std::size_t before = vocab.entity_count();
  extraction::EntityExtractor extractor(vocab, index, opts, opts.use_llm ? &s.chat() : nullptr,
                                        s.embed_if_configured(), s.prompts);
  const auto results = extractor.run(paragraphs);

  std::vector<Json> records;
  extraction::DropCounts dropped;
  std::size_t mentions = 0;
  for (const auto& r : results) {
    Json ms = Json::array();
    for (const auto& m : r.mentions) ms.push_back(extraction::to_json(m));
    mentions += r.mentions.size();
    dropped += r.dropped;
    records.push_back({{"paragraph_path", r.paragraph_path},
                       {"mentions", ms},
                       {"dropped", extraction::to_json(r.dropped)}});
  }
  const fs::path out = or_default(a.out, s.path("mentions.jsonl"));
  const fs::path vocab_out = or_default(a.vocab_out, s.path("vocabulary.augmented.jsonl"));
  io::write_jsonl(out, records);
  vocab::save_vocabulary(vocab, vocab_out);
  s.produced(out);
  s.produced(vocab_out);
  s.counters["paragraphs"] = results.size();
  s.counters["mentions"] = mentions;
  s.counters["new_entities"] = vocab.entity_count() - before;
  s.counters["dropped"] = extraction::to_json(dropped);
  s.out << mentions << " mentions in " << results.size() << " paragraphs, "
        << vocab.entity_count() - before << " new entities, " << dropped.total()
        << " items dropped\n";
}

void extract_relations(Session& s, const ExtractArgs& a) {
  const auto paragraphs = load_paragraphs(or_default(a.paragraphs, s.path("paragraphs.jsonl")));
  const auto mentions = load_mentions(or_default(a.mentions, s.path("mentions.jsonl")));
  const auto vocab = open_vocabulary(s.working_vocabulary(a.vocab));

  std::vector<const corpus::Paragraph*> todo;
  std::vector<std::vector<extraction::EntityRef>> refs;
  for (const auto& p : paragraphs) {
    const auto it = mentions.by_paragraph.find(p.path);
    if (it == mentions.by_paragraph.end() || it->second.empty()) continue;
    todo.push_back(&p);
    refs.push_back(extraction::entity_refs(it->second, vocab));
  }
  std::vector<extraction::RelationExtraction> results(todo.size());
  auto& chat = s.chat();
  parallel_for(todo.size(), s.cfg.workers, [&](std::size_t i) {
    results[i] = extraction::extract_relations(*todo[i], refs[i], chat, s.prompts);
  });

  std::vector<Json> records;
  extraction::DropCounts dropped;
  std::size_t n_rel = 0;
  std::size_t n_desc = 0;
  for (const auto& r : results) {
    for (const auto& rel : r.relations) {
      Json j = extraction::to_json(rel);
      j["kind"] = "relation";
      records.push_back(std::move(j));
    }
    for (const auto& d : r.descriptions) {
      Json j = extraction::to_json(d);
      j["kind"] = "description";
      records.push_back(std::move(j));
    }
    n_rel += r.relations.size();
    n_desc += r.descriptions.size();
    dropped += r.dropped;
  }
  const fs::path out = or_default(a.out, s.path("relations.jsonl"));
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["paragraphs"] = todo.size();
  s.counters["relations"] = n_rel;
  s.counters["descriptions"] = n_desc;
  s.counters["dropped"] = extraction::to_json(dropped);
  s.out << n_rel << " relations, " << n_desc << " descriptions from " << todo.size()
        << " paragraphs, " << dropped.total() << " items dropped\n";
}

void extract_spans(Session& s, const ExtractArgs& a) {
  std::vector<extraction::TextUnit> contexts;
  if (!a.contexts.empty()) {
    contexts = load_contexts(a.contexts);
  } else {
    for (const auto& p : load_paragraphs(or_default(a.paragraphs, s.path("paragraphs.jsonl")))) {
      contexts.push_back({p.path, p.text});
    }
  }
  const std::size_t input_count = contexts.size();
  if (a.domain_filter) contexts = extraction::filter_domain(contexts, s.chat(), s.prompts);
  const std::size_t in_domain = contexts.size();

  auto vocab = open_vocabulary(s.working_vocabulary(a.vocab));
  linker::SurfaceIndex index(vocab);
  auto opts = s.extractor_options();
  if (a.no_llm) opts.use_llm = false;
  if (a.no_filter) opts.use_filter = false;
  std::vector<corpus::Paragraph> units;
  for (const auto& c : contexts) {
    corpus::Paragraph p;
    p.para_id = c.id;
    p.path = c.id;
    p.text = c.text;
    units.push_back(std::move(p));
  }
  extraction::EntityExtractor extractor(vocab, index, opts, opts.use_llm ? &s.chat() : nullptr,
                                        s.embed_if_configured(), s.prompts);
  const auto found = extractor.run(units);

  // Contexts without an entity carry no spans; with the domain filter on
  // they are dropped entirely.
  std::vector<extraction::TextUnit> kept;
  std::vector<std::vector<extraction::EntityRef>> refs;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    if (a.domain_filter && found[i].mentions.empty()) continue;
    kept.push_back(contexts[i]);
    refs.push_back(extraction::entity_refs(found[i].mentions, vocab));
  }
  std::vector<extraction::SpanExtraction> results(kept.size());
  parallel_for(kept.size(), s.cfg.workers, [&](std::size_t i) {
    if (refs[i].empty()) return;
    results[i] = extraction::extract_entity_spans(kept[i].id, kept[i].text, refs[i], s.chat(),
                                                  s.prompts);
  });

  std::vector<extraction::EntityCentricSpan> spans;
  extraction::DropCounts dropped;
  std::vector<Json> records;
  for (auto& r : results) {
    dropped += r.dropped;
    for (auto& sp : r.spans) {
      records.push_back(extraction::to_json(sp));
      spans.push_back(std::move(sp));
    }
  }
  const fs::path spans_out = or_default(a.out, s.path("spans.jsonl"));
  io::write_jsonl(spans_out, records);
  s.produced(spans_out);

  const auto store = retrieval::build_store(kept, spans, s.embed());
  const fs::path store_out = or_default(a.store_out, s.path("store.jsonl"));
  retrieval::save_store(store, store_out);
  s.produced(store_out);
  s.counters["contexts"] = input_count;
  s.counters["in_domain"] = in_domain;
  s.counters["stored_contexts"] = store.size();
  s.counters["spans"] = spans.size();
  s.counters["dropped"] = extraction::to_json(dropped);
  s.out << store.size() << " contexts stored (" << input_count << " read, " << in_domain
        << " in domain), " << spans.size() << " entity spans\n";
}

// --- kg ---------------------------------------------------------------------

struct KgArgs {
  std::string paragraphs, mentions, relations, vocab, in, out, graph;
  std::size_t top = 10;
};

void print_degree_table(std::ostream& out, const char* title,
                        const std::vector<kg::DegreeRow>& rows) {
  out << title << "\n";
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-5s %-40s %8s %10s %10s\n", "rank", "entity", "degree",
                "related", "describes");
  out << buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-5zu %-40s %8zu %10zu %10zu\n", i + 1,
                  rows[i].entity_name.c_str(), rows[i].degree.total(), rows[i].degree.related,
                  rows[i].degree.describes);
    out << buf;
  }
}

void kg_build(Session& s, const KgArgs& a) {
  const auto paragraphs = load_paragraphs(or_default(a.paragraphs, s.path("paragraphs.jsonl")));
  const auto mentions = load_mentions(or_default(a.mentions, s.path("mentions.jsonl")));
  const auto relations = load_relations(or_default(a.relations, s.path("relations.jsonl")));
  const auto vocab = open_vocabulary(s.working_vocabulary(a.vocab));
  kg::GraphInputs in;
  in.paragraphs = &paragraphs;
  in.mentions = &mentions.mentions;
  in.relations = &relations.relations;
  in.descriptions = &relations.descriptions;
  in.vocab = &vocab;
  const kg::Graph g = kg::build_graph(in);
  const fs::path out = or_default(a.out, s.path("kg"));
  kg::persist(g, out);
  s.produced(out / "nodes.jsonl");
  s.produced(out / "edges.jsonl");
  s.counters["entity_nodes"] = g.entity_count();
  s.counters["paragraph_nodes"] = g.paragraph_count();
  s.counters["edges"] = g.edges().size();
  s.out << g.entity_count() << " entity nodes, " << g.paragraph_count() << " paragraph nodes, "
        << g.edges().size() << " edges\n";
}

void kg_persist(Session& s, const KgArgs& a) {
  const fs::path in = or_default(a.in, s.path("kg"));
  if (a.out.empty()) throw ConfigError("kg persist needs --out");
  const kg::Graph g = kg::load(in);
  kg::persist(g, a.out);
  s.produced(fs::path(a.out) / "nodes.jsonl");
  s.produced(fs::path(a.out) / "edges.jsonl");
  s.counters["nodes"] = g.nodes().size();
  s.counters["edges"] = g.edges().size();
  s.out << "wrote " << g.nodes().size() << " nodes and " << g.edges().size() << " edges to "
        << a.out << "\n";
}

void kg_stats(Session& s, const KgArgs& a) {
  const kg::Graph g = kg::load(or_default(a.graph, s.path("kg")));
  std::size_t related = 0;
  for (const auto& e : g.edges()) related += e.label == kg::EdgeLabel::kRelatedTo;
  s.out << "entity nodes\t" << g.entity_count() << "\n"
        << "paragraph nodes\t" << g.paragraph_count() << "\n"
        << "RELATED_TO edges\t" << related << "\n"
        << "DESCRIBES edges\t" << g.edges().size() - related << "\n\n";
  print_degree_table(s.out, "Most explored entities", kg::top_degree(g, a.top));
  s.out << "\n";
  print_degree_table(s.out, "Least explored entities", kg::bottom_degree(g, a.top));
  s.counters["entity_nodes"] = g.entity_count();
  s.counters["paragraph_nodes"] = g.paragraph_count();
  s.counters["related_edges"] = related;
  s.counters["describes_edges"] = g.edges().size() - related;
}

// --- retrieve ---------------------------------------------------------------

struct RetrieveArgs {
  std::string store, questions, out, graph, paragraphs, vocab;
  std::optional<std::size_t> k;
  std::optional<double> weight;
  std::optional<double> threshold;
};

std::vector<Embedding> embed_questions(Session& s, const std::vector<Question>& qs) {
  std::vector<std::string> texts;
  for (const auto& q : qs) texts.push_back(q.question);
  if (texts.empty()) return {};
  return embed_batched(s.embed(), texts);
}

void report_precision(Session& s, const std::vector<Question>& qs,
                      const std::vector<std::pair<std::string, std::string>>& predictions) {
  std::map<std::string, std::string> gold;
  for (const auto& q : qs) {
    if (q.gold) gold.emplace(q.id, *q.gold);
  }
  if (gold.empty() || predictions.empty()) return;
  const double p = retrieval::precision_at_1(predictions, gold);
  s.counters["precision_at_1"] = p;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * p);
  s.out << "precision@1: " << buf << " (" << predictions.size() << " questions)\n";
}

void retrieve_context(Session& s, const RetrieveArgs& a) {
  const auto store = retrieval::load_store(or_default(a.store, s.path("store.jsonl")));
  if (store.size() < 2) {
    throw ValidationError("context retrieval needs at least 2 contexts, store has " +
                          std::to_string(store.size()));
  }
  if (a.questions.empty()) throw ConfigError("retrieve context needs --questions");
  retrieval::SpanWeightSchedule schedule = s.cfg.schedule;
  if (a.threshold) schedule = schedule.truncated(*a.threshold);
  if (a.weight) schedule = retrieval::SpanWeightSchedule::uniform(*a.weight, schedule.entry_threshold());

  const auto qs = load_questions(a.questions);
  const auto vecs = embed_questions(s, qs);
  std::vector<Json> records;
  std::vector<std::pair<std::string, std::string>> predictions;
  std::size_t reweighted = 0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto d = retrieval::retrieve_context(store, schedule, vecs[i]);
    reweighted += d.scores.reweighted;
    Json j{{"id", qs[i].id},
           {"context_id", d.context_id},
           {"top2", {d.top2.first, d.top2.second}},
           {"s1", d.s1},
           {"s2", d.s2},
           {"es1", d.es1 ? Json(*d.es1) : Json()},
           {"es2", d.es2 ? Json(*d.es2) : Json()},
           {"reweighted", d.scores.reweighted},
           {"weight", d.scores.weight},
           {"final1", d.scores.final1},
           {"final2", d.scores.final2}};
    if (qs[i].gold) {
      j["gold"] = *qs[i].gold;
      predictions.emplace_back(qs[i].id, d.context_id);
    }
    records.push_back(std::move(j));
  }
  const fs::path out = or_default(a.out, s.path("retrieval/context.jsonl"));
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["questions"] = qs.size();
  s.counters["reweighted"] = reweighted;
  s.counters["schedule"] = config::format_buckets(schedule.buckets());
  s.out << qs.size() << " questions, " << reweighted << " decided with span reweighting\n";
  report_precision(s, qs, predictions);
}

void retrieve_baseline(Session& s, const RetrieveArgs& a) {
  const auto store = retrieval::load_store(or_default(a.store, s.path("store.jsonl")));
  if (a.questions.empty()) throw ConfigError("retrieve baseline needs --questions");
  const std::size_t k = a.k.value_or(s.cfg.k);
  const auto qs = load_questions(a.questions);
  const auto vecs = embed_questions(s, qs);
  std::vector<Json> records;
  std::vector<std::pair<std::string, std::string>> predictions;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto ranked = retrieval::baseline_topk(store, vecs[i], k);
    Json items = Json::array();
    for (const auto& r : ranked) {
      items.push_back({{"id", r.id},
                       {"score", r.score},
                       {"text", store.contexts()[*store.find(r.id)].text}});
    }
    if (qs[i].gold && !ranked.empty()) predictions.emplace_back(qs[i].id, ranked.front().id);
    records.push_back({{"id", qs[i].id}, {"question", qs[i].question}, {"items", items}});
  }
  const fs::path out = or_default(a.out, s.path("retrieval/baseline.jsonl"));
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["questions"] = qs.size();
  s.out << qs.size() << " questions ranked (k=" << k << ")\n";
  report_precision(s, qs, predictions);
}

void retrieve_subgraph(Session& s, const RetrieveArgs& a) {
  const kg::Graph g = kg::load(or_default(a.graph, s.path("kg")));
  if (a.questions.empty()) throw ConfigError("retrieve subgraph needs --questions");
  const std::size_t k = a.k.value_or(s.cfg.k);
  std::map<std::string, std::string> texts;
  for (const auto& p : load_paragraphs(or_default(a.paragraphs, s.path("paragraphs.jsonl")))) {
    texts.emplace(p.path, p.text);
  }
  auto vocab = open_vocabulary(s.working_vocabulary(a.vocab));
  linker::SurfaceIndex index(vocab);
  auto opts = s.extractor_options();
  opts.workers = 1;
  extraction::EntityExtractor extractor(vocab, index, opts, opts.use_llm ? &s.chat() : nullptr,
                                        s.embed_if_configured(), s.prompts);
  const auto names = [&](std::string_view q) {
    std::vector<std::string> out;
    for (const auto& id : extractor.entities_in(q)) {
      if (const std::string* n = vocab.standard_name_for_id(id)) out.push_back(*n);
    }
    return out;
  };
  std::optional<retrieval::ContextStore> store;
  const fs::path store_path = or_default(a.store, s.path("store.jsonl"));
  if (fs::exists(store_path)) store = retrieval::load_store(store_path);
  kg::SubgraphRetriever retriever(g, std::move(texts), names, s.embed(),
                                  s.chat_if_configured(), s.prompts,
                                  store ? &*store : nullptr);

  const auto qs = load_questions(a.questions);
  std::vector<Json> records;
  std::size_t fallbacks = 0;
  for (const auto& q : qs) {
    const auto r = retriever.retrieve(q.question, k);
    fallbacks += r.fallback;
    Json items = Json::array();
    for (const auto& it : r.items) {
      items.push_back({{"edge_id", it.edge_id},
                       {"relation_text", it.relation_text},
                       {"paragraph_path", it.paragraph_path},
                       {"text", it.paragraph_text},
                       {"score", it.score}});
    }
    Json j{{"id", q.id},
           {"question", q.question},
           {"entities", r.question_entities},
           {"fallback", r.fallback},
           {"candidates", r.candidate_count},
           {"items", items}};
    if (!r.important.first.empty()) j["important"] = {r.important.first, r.important.second};
    records.push_back(std::move(j));
  }
  const fs::path out = or_default(a.out, s.path("retrieval/subgraph.jsonl"));
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["questions"] = qs.size();
  s.counters["fallbacks"] = fallbacks;
  s.out << qs.size() << " questions, " << fallbacks << " answered by the baseline fallback\n";
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string graph, out, a, b, predicted, gold, vocab, answers, questions, label = "model";
  std::size_t n_entities = 2, count = 10;
  std::optional<std::size_t> pool_size;
  std::optional<std::uint64_t> seed;
};

void eval_gen_questions(Session& s, const EvalArgs& a) {
  const kg::Graph g = kg::load(or_default(a.graph, s.path("kg")));
  eval::GenOptions o;
  o.n_entities = a.n_entities;
  o.count = a.count;
  o.pool_size = a.pool_size.value_or(s.cfg.pool_size);
  o.seed = a.seed.value_or(s.cfg.seed);
  const auto qs = eval::gen_questions(g, o, s.chat(), s.prompts);
  std::vector<Json> records;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    records.push_back(
        {{"id", "q" + std::to_string(i + 1)}, {"question", qs[i].question}, {"seeds", qs[i].seeds}});
  }
  const fs::path out = or_default(a.out, s.path("eval/questions.jsonl"));
  io::write_jsonl(out, records);
  s.produced(out);
  s.counters["questions"] = qs.size();
  s.counters["pool_size"] = o.pool_size;
  s.counters["seed"] = o.seed;
  s.out << qs.size() << " questions generated\n";
}

struct RetrievedSet {
  std::string question;
  std::vector<std::string> texts;
};

std::map<std::string, RetrievedSet> load_sets(const fs::path& path,
                                              std::vector<std::string>* order) {
  config::require_file(path, "retrieval result file");
  std::map<std::string, RetrievedSet> out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      RetrievedSet set;
      const std::string id = j.at("id").get<std::string>();
      set.question = j.at("question").get<std::string>();
      for (const Json& it : j.at("items")) set.texts.push_back(it.at("text").get<std::string>());
      if (out.contains(id)) {
        throw ValidationError(where(path, line) + ": duplicate question id '" + id + "'");
      }
      if (order != nullptr) order->push_back(id);
      out.emplace(id, std::move(set));
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad retrieval record: " + e.what());
    }
  });
  return out;
}

void eval_judge(Session& s, const EvalArgs& a) {
  std::vector<std::string> order;
  const auto set_a = load_sets(or_default(a.a, s.path("retrieval/subgraph.jsonl")), &order);
  const auto set_b = load_sets(or_default(a.b, s.path("retrieval/baseline.jsonl")), nullptr);
  for (const auto& id : order) {
    if (!set_b.contains(id)) throw ValidationError("question '" + id + "' missing from set B");
  }
  std::vector<std::pair<eval::JudgeVerdict, eval::JudgeVerdict>> verdicts(order.size());
  auto& chat = s.chat();
  parallel_for(order.size(), s.cfg.workers, [&](std::size_t i) {
    const auto& sa = set_a.at(order[i]);
    verdicts[i] = eval::judge_pair(order[i], sa.question, sa.texts, set_b.at(order[i]).texts,
                                   chat, s.prompts);
  });
  std::vector<eval::JudgeVerdict> flat;
  std::vector<Json> records;
  for (const auto& [first, second] : verdicts) {
    flat.push_back(first);
    flat.push_back(second);
    records.push_back(eval::to_json(first));
    records.push_back(eval::to_json(second));
  }
  const eval::Tally t = eval::tally(flat);
  const fs::path out = or_default(a.out, s.path("eval/verdicts.jsonl"));
  io::write_jsonl(out, records);
  write_json(s.path("eval/tally.json"), eval::to_json(t));
  s.produced(out);
  s.produced(s.path("eval/tally.json"));
  s.counters["tally"] = eval::to_json(t);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "questions %zu\nset A best when first  %zu (%.2f%%)\nset A best when second "
                "%zu (%.2f%%)\ncommon                 %zu (%.2f%%)\n",
                t.questions, t.best_when_first, t.percent(t.best_when_first), t.best_when_second,
                t.percent(t.best_when_second), t.common, t.percent(t.common));
  s.out << buf;
}

// {"doc_id","entities":[...]} records, or a mention file whose entities are
// named through the vocabulary.
std::map<std::string, std::set<std::string>> load_entity_sets(const fs::path& path,
                                                              const vocab::Vocabulary* vocab) {
  config::require_file(path, "entity set file");
  std::map<std::string, std::set<std::string>> out;
  io::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      if (j.contains("doc_id")) {
        auto& slot = out[j["doc_id"].get<std::string>()];
        for (const Json& e : j.at("entities")) {
          slot.insert(corpus::normalize_surface(e.get<std::string>()));
        }
        return;
      }
      if (vocab == nullptr) {
        throw ConfigError("reading a mention file for metrics needs a vocabulary");
      }
      const std::string path_str = j.at("paragraph_path").get<std::string>();
      auto& slot = out[corpus::parse_path(path_str).doc_id];
      for (const Json& m : j.at("mentions")) {
        const std::string id = m.at("entity_id").get<std::string>();
        const std::string* name = vocab->standard_name_for_id(id);
        if (name == nullptr) {
          throw ValidationError(where(path, line) + ": unknown entity id '" + id + "'");
        }
        slot.insert(corpus::normalize_surface(*name));
      }
    } catch (const Json::exception& e) {
      throw ParseError(where(path, line) + ": bad entity set record: " + e.what());
    }
  });
  return out;
}

void eval_metrics(Session& s, const EvalArgs& a) {
  if (a.gold.empty()) throw ConfigError("eval metrics needs --gold");
  std::optional<vocab::Vocabulary> vocab;
  const fs::path vpath = s.working_vocabulary(a.vocab);
  if (!vpath.empty() && fs::exists(vpath)) vocab = vocab::load_vocabulary(vpath);
  const auto pred = load_entity_sets(or_default(a.predicted, s.path("mentions.jsonl")),
                                     vocab ? &*vocab : nullptr);
  const auto gold = load_entity_sets(a.gold, nullptr);
  const auto m = eval::f1_metrics(pred, gold);
  Json per_doc = Json::object();
  for (const auto& [doc, p] : m.per_document) per_doc[doc] = eval::to_json(p);
  const Json report{{"documents", m.documents}, {"macro", eval::to_json(m.mean)},
                    {"per_document", per_doc}};
  const fs::path out = or_default(a.out, s.path("eval/metrics.json"));
  write_json(out, report);
  s.produced(out);
  s.counters["macro"] = eval::to_json(m.mean);
  char buf[160];
  std::snprintf(buf, sizeof buf, "documents %zu\nprecision %.3f\nrecall    %.3f\nF1        %.3f\n",
                m.documents, m.mean.precision, m.mean.recall, m.mean.f1);
  s.out << buf;
}

void eval_refs(Session& s, const EvalArgs& a) {
  std::vector<std::pair<std::string, std::string>> answers;  // (id, answer)
  if (!a.answers.empty()) {
    config::require_file(a.answers, "answer file");
    io::for_each_jsonl(a.answers, [&](std::size_t line, const Json& j) {
      try {
        answers.emplace_back(j.at("id").get<std::string>(), j.at("answer").get<std::string>());
      } catch (const Json::exception& e) {
        throw ParseError(where(a.answers, line) + ": bad answer record: " + e.what());
      }
    });
  } else if (!a.questions.empty()) {
    const auto qs = load_questions(a.questions);
    answers.resize(qs.size());
    auto& chat = s.chat();
    parallel_for(qs.size(), s.cfg.workers, [&](std::size_t i) {
      answers[i] = {qs[i].id, chat.chat(providers::user_prompt(s.prompts.render(
                                  prompts::kAnswerWithReferences, {{"question", qs[i].question}})))};
    });
  } else {
    throw ConfigError("eval refs needs --answers or --questions");
  }

  std::vector<eval::ClaimedReference> refs;
  std::vector<std::string> owner;
  std::size_t malformed = 0;
  std::vector<Json> malformed_records;
  for (const auto& [id, answer] : answers) {
    const auto ex = eval::extract_references(answer);
    for (const auto& r : ex.refs) {
      refs.push_back(r);
      owner.push_back(id);
    }
    malformed += ex.malformed.size();
    for (const auto& line : ex.malformed) {
      malformed_records.push_back({{"id", id}, {"malformed", line}});
    }
  }
  const auto check = eval::check_references(refs, s.biblio(), s.cfg.workers);
  std::vector<Json> records;
  for (std::size_t i = 0; i < check.records.size(); ++i) {
    Json j = eval::to_json(check.records[i]);
    j["id"] = owner[i];
    records.push_back(std::move(j));
  }
  for (auto& m : malformed_records) records.push_back(std::move(m));
  const fs::path out = or_default(a.out, s.path("eval/references.jsonl"));
  io::write_jsonl(out, records);
  Json summary = eval::to_json(check.summary);
  summary["malformed"] = malformed;
  write_json(s.path("eval/references_summary.json"), summary);
  s.produced(out);
  s.produced(s.path("eval/references_summary.json"));
  s.counters["references"] = summary;
  s.out << eval::summary_table(check.summary, a.label);
  if (malformed > 0) s.out << malformed << " malformed reference lines\n";
}

// --- provider ---------------------------------------------------------------

void provider_record(Session& s, const std::string& session_file) {
  config::require_file(session_file, "session file");
  if (s.cfg.chat.mode != providers::Mode::kRecord && s.cfg.embed.mode != providers::Mode::kRecord) {
    throw ConfigError("provider record needs record mode (run.mode = record)");
  }
  ChatClient* chat = s.cfg.chat.mode == providers::Mode::kRecord ? &s.chat() : nullptr;
  EmbedClient* embed =
      s.cfg.embed.mode == providers::Mode::kRecord && s.embed_configured() ? &s.embed() : nullptr;
  const auto summary = providers::record_session(session_file, chat, embed);
  s.counters["chats"] = summary.chats;
  s.counters["embeds"] = summary.embeds;
  s.out << "recorded " << summary.chats << " chat and " << summary.embeds << " embed requests\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Transports& transports) {
  CLI::App app{"Knowledge graph construction and entity-augmented retrieval", "kgrag"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "run configuration file")->required();

  using Action = std::function<void(Session&)>;
  std::vector<std::pair<CLI::App*, std::pair<std::string, Action>>> commands;
  const auto add = [&](CLI::App* group, const std::string& name, const std::string& help,
                       Action action) {
    CLI::App* sub = group->add_subcommand(name, help);
    commands.push_back({sub, {group->get_name() + " " + name, std::move(action)}});
    return sub;
  };

  VocabArgs va;
  CLI::App* vocab = app.add_subcommand("vocab", "vocabulary management")->require_subcommand(1);
  auto* vb = add(vocab, "build", "build a vocabulary from a term export",
                 [&](Session& s) { vocab_build(s, va); });
  vb->add_option("--ontology", va.ontology, "term export TSV")->required();
  vb->add_option("--source", va.source, "source tag for the entries");
  vb->add_option("--on-conflict", va.on_conflict, "error | first");
  vb->add_option("--out", va.out, "output vocabulary");
  auto* vc = add(vocab, "clean", "drop stopword surfaces",
                 [&](Session& s) { vocab_clean(s, va); });
  vc->add_option("--stopwords", va.stopwords, "stopword list")->required();
  vc->add_option("--in", va.in);
  vc->add_option("--out", va.out);
  vc->add_flag("--dry-run", va.dry_run, "report what would be removed, write nothing");
  auto* vs = add(vocab, "stats", "vocabulary counts", [&](Session& s) { vocab_stats(s, va); });
  vs->add_option("--in", va.in);

  CorpusArgs ca;
  CLI::App* corpus_cmd = app.add_subcommand("corpus", "corpus handling")->require_subcommand(1);
  auto* ci = add(corpus_cmd, "ingest", "split documents into paragraphs",
                 [&](Session& s) { corpus_ingest(s, ca); });
  ci->add_option("--corpus", ca.corpus);
  ci->add_option("--out", ca.out);

  ExtractArgs ea;
  CLI::App* extract = app.add_subcommand("extract", "LLM and linker extraction")->require_subcommand(1);
  auto* ee = add(extract, "entities", "link and extract entities per paragraph",
                 [&](Session& s) { extract_entities(s, ea); });
  ee->add_option("--paragraphs", ea.paragraphs);
  ee->add_option("--vocab", ea.vocab);
  ee->add_option("--out", ea.out);
  ee->add_option("--vocab-out", ea.vocab_out);
  ee->add_flag("--no-llm", ea.no_llm, "linker only");
  ee->add_flag("--no-filter", ea.no_filter, "skip the filter prompt");
  auto* er = add(extract, "relations", "extract relations between paragraph entities",
                 [&](Session& s) { extract_relations(s, ea); });
  er->add_option("--paragraphs", ea.paragraphs);
  er->add_option("--mentions", ea.mentions);
  er->add_option("--vocab", ea.vocab);
  er->add_option("--out", ea.out);
  auto* es = add(extract, "spans", "extract entity-centric spans and build the context store",
                 [&](Session& s) { extract_spans(s, ea); });
  es->add_option("--contexts", ea.contexts, "JSONL of {id, text}; default: paragraphs");
  es->add_option("--paragraphs", ea.paragraphs);
  es->add_option("--vocab", ea.vocab);
  es->add_option("--out", ea.out, "span output");
  es->add_option("--store-out", ea.store_out);
  es->add_flag("--domain-filter", ea.domain_filter, "keep in-domain contexts with entities");
  es->add_flag("--no-llm", ea.no_llm);
  es->add_flag("--no-filter", ea.no_filter);

  KgArgs ka;
  CLI::App* kg_cmd = app.add_subcommand("kg", "knowledge graph")->require_subcommand(1);
  auto* kb = add(kg_cmd, "build", "build and persist the graph", [&](Session& s) { kg_build(s, ka); });
  kb->add_option("--paragraphs", ka.paragraphs);
  kb->add_option("--mentions", ka.mentions);
  kb->add_option("--relations", ka.relations);
  kb->add_option("--vocab", ka.vocab);
  kb->add_option("--out", ka.out);
  auto* ks = add(kg_cmd, "stats", "degree analytics", [&](Session& s) { kg_stats(s, ka); });
  ks->add_option("--graph", ka.graph);
  ks->add_option("--top", ka.top, "rows per table");
  auto* kp = add(kg_cmd, "persist", "load a graph and write it elsewhere",
                 [&](Session& s) { kg_persist(s, ka); });
  kp->add_option("--in", ka.in);
  kp->add_option("--out", ka.out)->required();

  RetrieveArgs ra;
  CLI::App* retrieve = app.add_subcommand("retrieve", "retrieval")->require_subcommand(1);
  auto* rc = add(retrieve, "context", "span-weighted top-1 context",
                 [&](Session& s) { retrieve_context(s, ra); });
  rc->add_option("--store", ra.store);
  rc->add_option("--questions", ra.questions)->required();
  rc->add_option("--out", ra.out);
  rc->add_option("--weight", ra.weight, "fixed span weight instead of the schedule");
  rc->add_option("--threshold", ra.threshold, "lower entry threshold");
  auto* rb = add(retrieve, "baseline", "cosine top-k contexts",
                 [&](Session& s) { retrieve_baseline(s, ra); });
  rb->add_option("--store", ra.store);
  rb->add_option("--questions", ra.questions)->required();
  rb->add_option("-k,--k", ra.k);
  rb->add_option("--out", ra.out);
  auto* rs = add(retrieve, "subgraph", "graph retrieval around question entities",
                 [&](Session& s) { retrieve_subgraph(s, ra); });
  rs->add_option("--graph", ra.graph);
  rs->add_option("--paragraphs", ra.paragraphs);
  rs->add_option("--vocab", ra.vocab);
  rs->add_option("--store", ra.store, "fallback store");
  rs->add_option("--questions", ra.questions)->required();
  rs->add_option("-k,--k", ra.k);
  rs->add_option("--out", ra.out);

  EvalArgs xa;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluation")->require_subcommand(1);
  auto* xg = add(eval_cmd, "gen-questions", "questions seeded by disconnected entities",
                 [&](Session& s) { eval_gen_questions(s, xa); });
  xg->add_option("--graph", xa.graph);
  xg->add_option("--n-entities", xa.n_entities)->check(CLI::Range(2, 3));
  xg->add_option("--count", xa.count);
  xg->add_option("--pool-size", xa.pool_size);
  xg->add_option("--seed", xa.seed);
  xg->add_option("--out", xa.out);
  auto* xj = add(eval_cmd, "judge", "pairwise judging with position swap",
                 [&](Session& s) { eval_judge(s, xa); });
  xj->add_option("--a", xa.a, "results for set A (default: subgraph)");
  xj->add_option("--b", xa.b, "results for set B (default: baseline)");
  xj->add_option("--out", xa.out);
  auto* xm = add(eval_cmd, "metrics", "macro precision/recall/F1 of entity sets",
                 [&](Session& s) { eval_metrics(s, xa); });
  xm->add_option("--predicted", xa.predicted);
  xm->add_option("--gold", xa.gold)->required();
  xm->add_option("--vocab", xa.vocab);
  xm->add_option("--out", xa.out);
  auto* xr = add(eval_cmd, "refs", "check cited references",
                 [&](Session& s) { eval_refs(s, xa); });
  xr->add_option("--answers", xa.answers, "JSONL of {id, answer}");
  xr->add_option("--questions", xa.questions, "ask the chat model instead");
  xr->add_option("--label", xa.label, "model label for the summary table");
  xr->add_option("--out", xa.out);

  std::string session_file;
  CLI::App* provider = app.add_subcommand("provider", "provider fixtures")->require_subcommand(1);
  auto* pr = add(provider, "record", "record a session into the fixture files",
                 [&](Session& s) { provider_record(s, session_file); });
  pr->add_option("--session", session_file)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kgrag: " << e.what() << "\n";
    return 2;
  }

  std::unique_ptr<Session> session;
  try {
    for (auto& [sub, cmd] : commands) {
      if (!sub->parsed()) continue;
      session = std::make_unique<Session>(config::load(config_path), transports, out);
      cmd.second(*session);
      session->finish(cmd.first);
      return 0;
    }
    err << "kgrag: no command given\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "kgrag: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    if (session) {
      try {
        session->save_fixtures();
      } catch (const std::exception&) {
      }
    }
    err << "kgrag: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace kgrag::cli
