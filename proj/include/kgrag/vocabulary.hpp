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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgrag::vocab {

// One surface form of an entity. `surface_form` is always stored in
// normalized form (see corpus::normalize_surface).
struct VocabEntry {
  std::string entity_id;
  std::string surface_form;
  std::string standard_name;
  bool is_preferred = false;
  std::string source;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

inline constexpr std::string_view kSyntheticPrefix = "new:";

enum class ConflictPolicy {
  kReject,     // a surface claimed by two entities is an error
  kKeepFirst,  // later non-preferred claims are dropped and reported
};

// The entity vocabulary: surface forms indexed to entities, each entity
// named by its preferred label.
//
// Invariants: every normalized surface maps to exactly one entity; every
// entity has exactly one preferred entry and its standard name normalizes
// to that entry's surface.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Validates and indexes. Entries repeating an (entity, surface) pair are
  // merged. `dropped`, when given, receives entries discarded under
  // kKeepFirst.
  static Vocabulary from_entries(std::vector<VocabEntry> entries,
                                 ConflictPolicy policy = ConflictPolicy::kReject,
                                 std::vector<VocabEntry>* dropped = nullptr);

  const std::vector<VocabEntry>& entries() const { return entries_; }
  std::size_t entity_count() const { return entity_order_.size(); }
  const std::vector<std::string>& entity_ids() const { return entity_order_; }

  // Looks the surface up after normalization.
  std::optional<std::string> entity_of(std::string_view surface) const;
  std::optional<std::string> standard_name_of(std::string_view surface) const;
  const std::string* standard_name_for_id(std::string_view entity_id) const;
  bool has_entity(std::string_view entity_id) const;

  // Registers a new entity whose preferred label (and only surface) is
  // `name`. Throws ValidationError if the surface is already indexed.
  // Not thread-safe: callers serialize additions.
  std::string add_entity(std::string_view name, std::string_view source = "llm");

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  void index_entry(std::size_t pos);

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::size_t> surface_index_;
  std::unordered_map<std::string, std::string> standard_names_;
  std::vector<std::string> entity_order_;
  std::size_t next_synthetic_ = 1;
};

Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

// Flattened ontology term export: `class_id<TAB>label_kind<TAB>text` with
// label_kind one of pref_label, label, alt_label, synonym, abbreviation.
// Yields one entry per distinct (class, normalized text); the preferred
// entry (pref_label if present, else label) comes first for each class.
std::vector<VocabEntry> build_from_ontology(const std::filesystem::path& path,
                                            std::string_view source);

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

struct CleanReport {
  std::vector<VocabEntry> dropped;
  // Preferred labels that are stopwords; kept so the entity keeps a name,
  // reported for manual review.
  std::vector<VocabEntry> flagged_preferred;
};

// Drops entries whose whole normalized surface is a stopword. Multiword
// surfaces are never removed.
Vocabulary clean_vocabulary(const Vocabulary& vocab,
                            const std::unordered_set<std::string>& stopwords,
                            CleanReport* report = nullptr);

}  // namespace kgrag::vocab
