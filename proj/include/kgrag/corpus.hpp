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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgrag::corpus {

enum class DocumentKind { kFulltext, kAbstract };

struct Section {
  std::string label;
  std::string text;
};

struct Document {
  std::string doc_id;
  std::string title;
  DocumentKind kind = DocumentKind::kFulltext;
  std::vector<Section> sections;
};

struct Paragraph {
  std::string para_id;  // "<doc_id>#<n>", n counting over the document
  std::string doc_id;
  std::string section_label;
  std::size_t index = 0;  // position within its section label
  std::string text;
  std::string path;  // "<doc_id>/<section_label>/<index>", components escaped
};

// A whitespace-delimited token. Offsets are byte offsets into the source
// text; `surface` is the exact slice, `normalized` the lowercased token
// with leading/trailing punctuation removed.
struct TokenSpan {
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string surface;
  std::string normalized;

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct PathParts {
  std::string doc_id;
  std::string section_label;
  std::size_t index = 0;

  friend bool operator==(const PathParts&, const PathParts&) = default;
};

// Reads the JSON-lines corpus. Raises ParseError naming the line for
// malformed records and ValidationError citing both lines for a repeated
// doc_id.
std::vector<Document> ingest_corpus(const std::filesystem::path& path);

// One paragraph per blank-line-separated block of each section. Sections
// sharing a label continue that label's index sequence so paths stay
// unique.
std::vector<Paragraph> split_paragraphs(const Document& doc);

std::vector<TokenSpan> tokenize(std::string_view text);

// Space-joined normalized tokens: the canonical form vocabulary surfaces
// and n-grams are compared in.
std::string normalize_surface(std::string_view text);

// '%' and '/' inside components are percent-escaped.
std::string make_path(std::string_view doc_id, std::string_view section_label,
                      std::size_t index);
PathParts parse_path(std::string_view path);

std::string_view kind_name(DocumentKind kind);

}  // namespace kgrag::corpus
