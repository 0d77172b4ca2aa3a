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
#include <unordered_map>
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/vocabulary.hpp"

namespace kgrag::providers {
class EmbedClient;
}

// Dictionary entity linking: every n-gram of a paragraph (up to max_n
// tokens) is scored against the vocabulary surfaces, pairs scoring at
// least alpha are kept (one best entity per n-gram), and the longest
// non-overlapping n-grams become the paragraph's mentions.
namespace kgrag::linker {

enum class SimFn { kFuzzy, kEmbed };
enum class Method { kFuzzy, kEmbed, kLlm };

SimFn parse_simfn(std::string_view name);
std::string_view simfn_name(SimFn fn);
std::string_view method_name(Method m);
Method parse_method(std::string_view name);

inline constexpr std::size_t kDefaultMaxN = 6;
inline constexpr double kDefaultAlphaFuzzy = 0.90;
inline constexpr double kDefaultAlphaEmbed = 0.95;

struct LinkerConfig {
  std::size_t max_n = kDefaultMaxN;
  double alpha = kDefaultAlphaFuzzy;
  SimFn simfn = SimFn::kFuzzy;

  static LinkerConfig defaults(SimFn fn);
  // Throws ConfigError unless max_n >= 1 and alpha in [0, 1].
  void validate() const;
};

// Half-open token interval [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool overlaps(const TokenRange& o) const {
    return begin < o.end && o.begin < end;
  }
  friend auto operator<=>(const TokenRange&, const TokenRange&) = default;
};

struct NGram {
  TokenRange range;
  std::string text;  // space-joined normalized tokens

  friend bool operator==(const NGram&, const NGram&) = default;
};

struct Candidate {
  NGram ngram;
  std::string entity_id;
  double score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct EntityMention {
  std::string paragraph_path;
  std::optional<TokenRange> token_range;  // absent for LLM-only mentions
  std::string surface;  // paragraph slice, edge punctuation stripped
  std::string entity_id;
  double score = 0.0;
  Method method = Method::kFuzzy;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

// All n-grams of length 1..max_n in (start, length) order.
std::vector<NGram> generate_ngrams(const std::vector<corpus::TokenSpan>& tokens,
                                   std::size_t max_n);

// 1 - levenshtein(a, b) / max(|a|, |b|) over code points; ("", "") -> 1.
double entsim_fuzzy(std::string_view a, std::string_view b);
// Dot product of unit vectors clamped to [-1, 1].
double entsim_embed(const Embedding& a, const Embedding& b);

// Vocabulary surfaces prepared for matching: an exact-surface hash map,
// surfaces bucketed by code-point length for fuzzy matching, and (for
// embed matching) a row-major matrix of surface embeddings.
class SurfaceIndex {
 public:
  SurfaceIndex() = default;
  explicit SurfaceIndex(const vocab::Vocabulary& vocab);

  std::size_t size() const { return surfaces_.size(); }
  const std::string& surface(std::size_t i) const { return surfaces_[i].text; }
  const std::string& entity_id(std::size_t i) const { return surfaces_[i].entity_id; }
  std::optional<std::size_t> find_exact(std::string_view normalized) const;

  // Appends a surface (for entities added after construction). The
  // embedding is required once the index carries embeddings.
  void add(std::string normalized_surface, std::string entity_id,
           std::optional<Embedding> embedding = std::nullopt);

  bool has_embeddings() const { return dim_ > 0 && embedded_ == surfaces_.size(); }
  std::size_t dim() const { return dim_; }
  // One embedding per surface, in index order.
  void set_embeddings(const std::vector<Embedding>& embeddings);
  std::span<const float> embedding_row(std::size_t i) const;

  // Surfaces whose code-point length lies in [lo, hi].
  template <typename Fn>
  void for_each_with_length(std::size_t lo, std::size_t hi, Fn&& fn) const {
    for (std::size_t len = lo; len <= hi && len < by_length_.size(); ++len) {
      for (std::size_t idx : by_length_[len]) fn(idx, surfaces_[idx].code_points);
    }
  }
  std::size_t max_length() const {
    return by_length_.empty() ? 0 : by_length_.size() - 1;
  }

 private:
  struct Surface {
    std::string text;
    std::u32string code_points;
    std::string entity_id;
  };
  std::vector<Surface> surfaces_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::vector<std::vector<std::size_t>> by_length_;
  std::vector<float> matrix_;
  std::size_t dim_ = 0;
  std::size_t embedded_ = 0;
};

// Embeds every surface of the index through the client, `batch` texts per
// request.
void embed_surfaces(SurfaceIndex& index, providers::EmbedClient& client,
                    std::size_t batch = 256);

// E_all restricted to each n-gram's best entity (highest score, then
// lexicographically smallest entity_id). `ngram_embeddings` is required
// in embed mode and parallel to `ngrams`.
std::vector<Candidate> match_candidates(
    const std::vector<NGram>& ngrams, const SurfaceIndex& index,
    const LinkerConfig& config,
    const std::vector<Embedding>* ngram_embeddings = nullptr);

// Greedy longest-first selection: candidates ordered by (length desc,
// score desc, start asc), each kept iff it overlaps nothing kept so far.
// Output is ordered by token start. Mention surfaces are n-gram texts.
std::vector<EntityMention> select_mentions(const std::vector<Candidate>& candidates,
                                           std::string_view paragraph_path = {},
                                           Method method = Method::kFuzzy);

// tokenize -> generate_ngrams -> match_candidates -> select_mentions.
// Mention surfaces are the original text slices minus edge punctuation.
// `embedder` is used only
// in embed mode.
std::vector<EntityMention> link_entities(const corpus::Paragraph& paragraph,
                                         const SurfaceIndex& index,
                                         const LinkerConfig& config,
                                         providers::EmbedClient* embedder = nullptr);

// Same pipeline over raw text (questions, ad hoc strings).
std::vector<EntityMention> link_text(std::string_view text, std::string_view path,
                                     const SurfaceIndex& index,
                                     const LinkerConfig& config,
                                     providers::EmbedClient* embedder = nullptr);

}  // namespace kgrag::linker
