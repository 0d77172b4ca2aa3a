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

#include "kgrag/vocabulary.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"
#include "kgrag/text.hpp"

namespace kgrag::vocab {
namespace {

std::optional<std::size_t> synthetic_number(std::string_view id) {
  if (id.substr(0, kSyntheticPrefix.size()) != kSyntheticPrefix) {
    return std::nullopt;
  }
  const std::string_view digits = id.substr(kSyntheticPrefix.size());
  std::size_t n = 0;
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    return std::nullopt;
  }
  return n;
}

Json entry_to_json(const VocabEntry& e) {
  return Json{{"entity_id", e.entity_id},
              {"surface_form", e.surface_form},
              {"standard_name", e.standard_name},
              {"is_preferred", e.is_preferred},
              {"source", e.source}};
}

}  // namespace

Vocabulary Vocabulary::from_entries(std::vector<VocabEntry> entries,
                                    ConflictPolicy policy,
                                    std::vector<VocabEntry>* dropped) {
  Vocabulary v;
  for (VocabEntry& e : entries) {
    if (e.entity_id.empty()) throw ValidationError("entry with empty entity_id");
    e.surface_form = corpus::normalize_surface(e.surface_form);
    if (e.surface_form.empty()) {
      throw ValidationError("entity '" + e.entity_id +
                            "' has an empty surface form");
    }
    const auto hit = v.surface_index_.find(e.surface_form);
    if (hit != v.surface_index_.end()) {
      VocabEntry& existing = v.entries_[hit->second];
      if (existing.entity_id == e.entity_id) {
        if (e.is_preferred && existing.is_preferred) continue;
        if (e.is_preferred) {
          existing.is_preferred = true;
          existing.standard_name = e.standard_name;
        }
        continue;
      }
      if (policy == ConflictPolicy::kReject || e.is_preferred) {
        throw ValidationError("surface '" + e.surface_form +
                              "' is mapped to both '" + existing.entity_id +
                              "' and '" + e.entity_id + "'");
      }
      if (dropped != nullptr) dropped->push_back(std::move(e));
      continue;
    }
    v.surface_index_.emplace(e.surface_form, v.entries_.size());
    v.entries_.push_back(std::move(e));
  }

  std::map<std::string, std::size_t> preferred_count;
  for (const VocabEntry& e : v.entries_) {
    if (!v.standard_names_.contains(e.entity_id)) {
      v.entity_order_.push_back(e.entity_id);
      v.standard_names_.emplace(e.entity_id, std::string());
      preferred_count[e.entity_id] = 0;
    }
    if (e.is_preferred) {
      if (++preferred_count[e.entity_id] > 1) {
        throw ValidationError("entity '" + e.entity_id +
                              "' has more than one preferred label");
      }
      if (corpus::normalize_surface(e.standard_name) != e.surface_form) {
        throw ValidationError("entity '" + e.entity_id + "': standard name '" +
                              e.standard_name +
                              "' does not match its preferred surface '" +
                              e.surface_form + "'");
      }
      v.standard_names_[e.entity_id] = e.standard_name;
    }
    if (const auto n = synthetic_number(e.entity_id)) {
      v.next_synthetic_ = std::max(v.next_synthetic_, *n + 1);
    }
  }
  for (const auto& [id, count] : preferred_count) {
    if (count == 0) {
      throw ValidationError("entity '" + id + "' has no preferred label");
    }
  }
  for (const VocabEntry& e : v.entries_) {
    if (e.standard_name != v.standard_names_[e.entity_id]) {
      throw ValidationError("entity '" + e.entity_id +
                            "' has inconsistent standard names '" +
                            e.standard_name + "' and '" +
                            v.standard_names_[e.entity_id] + "'");
    }
  }
  return v;
}

std::optional<std::string> Vocabulary::entity_of(std::string_view surface) const {
  const auto it = surface_index_.find(corpus::normalize_surface(surface));
  if (it == surface_index_.end()) return std::nullopt;
  return entries_[it->second].entity_id;
}

std::optional<std::string> Vocabulary::standard_name_of(
    std::string_view surface) const {
  const auto it = surface_index_.find(corpus::normalize_surface(surface));
  if (it == surface_index_.end()) return std::nullopt;
  return entries_[it->second].standard_name;
}

const std::string* Vocabulary::standard_name_for_id(
    std::string_view entity_id) const {
  const auto it = standard_names_.find(std::string(entity_id));
  return it == standard_names_.end() ? nullptr : &it->second;
}

bool Vocabulary::has_entity(std::string_view entity_id) const {
  return standard_names_.contains(std::string(entity_id));
}

void Vocabulary::index_entry(std::size_t pos) {
  const VocabEntry& e = entries_[pos];
  surface_index_.emplace(e.surface_form, pos);
  if (standard_names_.emplace(e.entity_id, e.standard_name).second) {
    entity_order_.push_back(e.entity_id);
  }
}

std::string Vocabulary::add_entity(std::string_view name,
                                   std::string_view source) {
  const std::string label = text::trim(name);
  const std::string surface = corpus::normalize_surface(label);
  if (surface.empty()) throw ValidationError("cannot add an entity with an empty name");
  if (const auto it = surface_index_.find(surface); it != surface_index_.end()) {
    throw ValidationError("'" + label + "' is already a surface of entity '" +
                          entries_[it->second].entity_id + "'");
  }
  std::string id;
  do {
    id = std::string(kSyntheticPrefix) + std::to_string(next_synthetic_++);
  } while (standard_names_.contains(id));
  entries_.push_back({id, surface, label, true, std::string(source)});
  index_entry(entries_.size() - 1);
  return id;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::vector<VocabEntry> entries;
  io::for_each_jsonl(path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      VocabEntry e;
      e.entity_id = rec.at("entity_id").get<std::string>();
      e.surface_form = rec.at("surface_form").get<std::string>();
      e.standard_name = rec.at("standard_name").get<std::string>();
      e.is_preferred = rec.at("is_preferred").get<bool>();
      e.source = rec.value("source", std::string());
      entries.push_back(std::move(e));
    } catch (const Json::exception& ex) {
      throw ParseError(where + ": bad vocabulary record: " + ex.what());
    }
  });
  return Vocabulary::from_entries(std::move(entries));
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::vector<Json> records;
  records.reserve(vocab.entries().size());
  for (const VocabEntry& e : vocab.entries()) records.push_back(entry_to_json(e));
  io::write_jsonl(path, records);
}

std::vector<VocabEntry> build_from_ontology(const std::filesystem::path& path,
                                            std::string_view source) {
  struct Term {
    std::string kind;
    std::string text;
  };
  std::vector<std::string> class_order;
  std::unordered_map<std::string, std::vector<Term>> terms;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 =
        t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected class_id<TAB>label_kind<TAB>text");
    }
    std::string cls = line.substr(0, t1);
    std::string kind = line.substr(t1 + 1, t2 - t1 - 1);
    std::string txt = text::trim(line.substr(t2 + 1));
    if (kind != "pref_label" && kind != "label" && kind != "alt_label" &&
        kind != "synonym" && kind != "abbreviation") {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": unknown label kind '" + kind + "'");
    }
    if (cls.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": empty class id");
    }
    auto [it, fresh] = terms.try_emplace(cls);
    if (fresh) class_order.push_back(cls);
    it->second.push_back({std::move(kind), std::move(txt)});
  }

  std::vector<VocabEntry> out;
  for (const std::string& cls : class_order) {
    const std::vector<Term>& ts = terms[cls];
    const Term* preferred = nullptr;
    for (const char* wanted : {"pref_label", "label"}) {
      for (const Term& t : ts) {
        if (t.kind == wanted && !corpus::normalize_surface(t.text).empty()) {
          preferred = &t;
          break;
        }
      }
      if (preferred != nullptr) break;
    }
    if (preferred == nullptr) {
      throw ValidationError("class '" + cls +
                            "' has neither a pref_label nor a label");
    }
    const std::string preferred_surface =
        corpus::normalize_surface(preferred->text);
    out.push_back({cls, preferred_surface, preferred->text, true,
                   std::string(source)});
    std::unordered_set<std::string> seen{preferred_surface};
    for (const Term& t : ts) {
      std::string surface = corpus::normalize_surface(t.text);
      if (surface.empty() || !seen.insert(surface).second) continue;
      out.push_back({cls, std::move(surface), preferred->text, false,
                     std::string(source)});
    }
  }
  return out;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = corpus::normalize_surface(line);
    if (!w.empty()) words.insert(std::move(w));
  }
  return words;
}

Vocabulary clean_vocabulary(const Vocabulary& vocab,
                            const std::unordered_set<std::string>& stopwords,
                            CleanReport* report) {
  std::vector<VocabEntry> kept;
  kept.reserve(vocab.entries().size());
  for (const VocabEntry& e : vocab.entries()) {
    const bool single_word = e.surface_form.find(' ') == std::string::npos;
    if (single_word && stopwords.contains(e.surface_form)) {
      if (e.is_preferred) {
        if (report != nullptr) report->flagged_preferred.push_back(e);
      } else {
        if (report != nullptr) report->dropped.push_back(e);
        continue;
      }
    }
    kept.push_back(e);
  }
  return Vocabulary::from_entries(std::move(kept));
}

}  // namespace kgrag::vocab
