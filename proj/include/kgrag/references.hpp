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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/jsonl.hpp"
#include "kgrag/providers.hpp"

// Checking model-cited publications against a bibliographic database, by
// DOI and by closest title.
namespace kgrag::eval {

inline constexpr double kTitleMatchThreshold = 0.9;

struct ClaimedReference {
  std::string title;
  std::string doi;  // normalized: lowercase, no resolver prefix

  friend bool operator==(const ClaimedReference&, const ClaimedReference&) = default;
};

struct ReferenceExtraction {
  std::vector<ClaimedReference> refs;
  std::vector<std::string> malformed;  // reference lines lacking a title or DOI
};

// Reference lines are those carrying a "Title:" or "DOI:" field; other
// lines are answer prose.
ReferenceExtraction extract_references(std::string_view answer);

// Lowercase, strip a resolver prefix ("https://doi.org/", "doi:") and
// trailing punctuation.
std::string normalize_doi(std::string_view doi);
// Lowercase words without punctuation, single-spaced.
std::string normalize_title(std::string_view title);

struct PaperRecord {
  std::string doi;
  std::string title;
};

class BiblioClient {
 public:
  virtual ~BiblioClient() = default;
  virtual std::optional<PaperRecord> by_doi(const std::string& doi) = 0;
  virtual std::optional<PaperRecord> closest_title(const std::string& title) = 0;
};

// A local database of {"doi","title"} JSONL records.
class FixtureBiblio : public BiblioClient {
 public:
  // Closest-title search finds nothing below this similarity.
  static constexpr double kSearchFloor = 0.5;

  explicit FixtureBiblio(std::vector<PaperRecord> papers);
  static FixtureBiblio load(const std::filesystem::path& path);

  std::optional<PaperRecord> by_doi(const std::string& doi) override;
  std::optional<PaperRecord> closest_title(const std::string& title) override;

 private:
  std::vector<PaperRecord> papers_;
};

// Semantic Scholar Academic Graph API: /graph/v1/paper/DOI:<doi> and
// /graph/v1/paper/search/match. Responses pass through the fixture store,
// so the client records and replays like the model clients.
class SemanticScholarBiblio : public BiblioClient, public providers::ProviderClient {
 public:
  explicit SemanticScholarBiblio(providers::ProviderConfig cfg,
                                 std::shared_ptr<providers::Transport> transport = nullptr);

  std::optional<PaperRecord> by_doi(const std::string& doi) override;
  std::optional<PaperRecord> closest_title(const std::string& title) override;

 private:
  std::optional<Json> lookup(const std::string& path, const providers::QueryParams& params);
};

enum class RefStatus { kVerified, kTitleMismatch, kNotFound, kError };

std::string_view status_name(RefStatus s);

struct ReferenceRecord {
  std::string claimed_title;
  std::string claimed_doi;
  RefStatus doi_status = RefStatus::kNotFound;
  RefStatus title_status = RefStatus::kNotFound;
  std::string doi_match_title;
  std::string title_match_title;
  std::string title_match_doi;
  double title_similarity = 0.0;
  std::string error;  // transport failure, when a status is kError
};

struct ReferenceSummary {
  std::size_t total = 0;
  std::size_t doi_not_found = 0;
  std::size_t doi_title_mismatch = 0;
  std::size_t doi_errors = 0;
  std::size_t title_not_found = 0;
  std::size_t title_mismatch = 0;
  std::size_t title_errors = 0;
  // (not found + mismatch) / total, as a percentage.
  double incorrect_doi_pct() const;
  double incorrect_title_pct() const;
};

struct ReferenceCheck {
  std::vector<ReferenceRecord> records;
  ReferenceSummary summary;
};

// DOI axis: not found when the lookup is empty, title mismatch when the
// normalized titles differ. Title axis: verified iff the closest match has
// similarity >= kTitleMatchThreshold. Transport errors mark the axis
// kError for that reference and the batch continues.
ReferenceCheck check_references(const std::vector<ClaimedReference>& refs, BiblioClient& biblio,
                                std::size_t workers = 1);

Json to_json(const ReferenceRecord& r);
Json to_json(const ReferenceSummary& s);
// Rows and columns laid out like a fabrication table for one model.
std::string summary_table(const ReferenceSummary& s, std::string_view model);

}  // namespace kgrag::eval
