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

#include "kgrag/corpus.hpp"

#include <charconv>
#include <unordered_map>

#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"
#include "kgrag/text.hpp"

namespace kgrag::corpus {
namespace {

std::string escape_component(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '%') {
      out += "%25";
    } else if (c == '/') {
      out += "%2F";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string unescape_component(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const std::string_view code = s.substr(i + 1, 2);
      if (code == "25") {
        out.push_back('%');
      } else if (code == "2F") {
        out.push_back('/');
      } else {
        throw ParseError("bad escape in paragraph path component: " +
                         std::string(s));
      }
      i += 2;
    } else if (s[i] == '%') {
      throw ParseError("truncated escape in paragraph path component: " +
                       std::string(s));
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

Document parse_document(const Json& rec, const std::string& where) {
  const auto fail = [&](const std::string& msg) -> void {
    throw ParseError(where + ": " + msg);
  };
  if (!rec.is_object()) fail("record is not a JSON object");
  for (const char* key : {"doc_id", "title", "kind", "sections"}) {
    if (!rec.contains(key)) fail(std::string("missing field '") + key + "'");
  }
  Document doc;
  if (!rec["doc_id"].is_string() || !rec["title"].is_string() ||
      !rec["kind"].is_string() || !rec["sections"].is_array()) {
    fail("field has the wrong type");
  }
  doc.doc_id = rec["doc_id"].get<std::string>();
  doc.title = rec["title"].get<std::string>();
  if (doc.doc_id.empty()) fail("empty doc_id");
  const std::string kind = rec["kind"].get<std::string>();
  if (kind == "fulltext") {
    doc.kind = DocumentKind::kFulltext;
  } else if (kind == "abstract") {
    doc.kind = DocumentKind::kAbstract;
  } else {
    fail("unknown kind '" + kind + "'");
  }
  for (const Json& sec : rec["sections"]) {
    if (!sec.is_object() || !sec.contains("label") || !sec.contains("text") ||
        !sec["label"].is_string() || !sec["text"].is_string()) {
      fail("section needs string 'label' and 'text'");
    }
    doc.sections.push_back(
        {sec["label"].get<std::string>(), sec["text"].get<std::string>()});
  }
  if (doc.kind == DocumentKind::kAbstract && doc.sections.size() != 1) {
    fail("abstract document must have exactly one section");
  }
  return doc;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\f\v") == std::string_view::npos;
}

}  // namespace

std::string_view kind_name(DocumentKind kind) {
  return kind == DocumentKind::kAbstract ? "abstract" : "fulltext";
}

std::vector<Document> ingest_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;
  io::for_each_jsonl(path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Document doc = parse_document(rec, where);
    auto [it, inserted] = seen.emplace(doc.doc_id, line_no);
    if (!inserted) {
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "' on lines " +
                            std::to_string(it->second) + " and " +
                            std::to_string(line_no));
    }
    docs.push_back(std::move(doc));
  });
  return docs;
}

std::vector<Paragraph> split_paragraphs(const Document& doc) {
  std::vector<Paragraph> out;
  std::unordered_map<std::string, std::size_t> next_index;
  for (const Section& sec : doc.sections) {
    std::vector<std::string> blocks;
    std::string current;
    std::size_t pos = 0;
    const std::string_view text = sec.text;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      const std::string_view line = text.substr(pos, nl - pos);
      if (is_blank(line)) {
        if (!current.empty()) blocks.push_back(std::move(current));
        current.clear();
      } else {
        if (!current.empty()) current.push_back('\n');
        current.append(line);
      }
      pos = nl + 1;
    }
    if (!current.empty()) blocks.push_back(std::move(current));

    for (std::string& block : blocks) {
      std::string body = text::trim(block);
      if (body.empty()) continue;
      std::size_t& idx = next_index[sec.label];
      Paragraph p;
      p.doc_id = doc.doc_id;
      p.section_label = sec.label;
      p.index = idx;
      p.para_id = doc.doc_id + "#" + std::to_string(out.size());
      p.path = make_path(doc.doc_id, sec.label, idx);
      p.text = std::move(body);
      out.push_back(std::move(p));
      ++idx;
    }
  }
  return out;
}

std::vector<TokenSpan> tokenize(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  const auto flush = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    const std::string_view surface = text.substr(start, end - start);
    std::string normalized = text::normalize_token(surface);
    if (!normalized.empty()) {
      out.push_back({start, end, std::string(surface), std::move(normalized)});
    }
    start = std::string_view::npos;
  };
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t c = text::next_code_point(text, pos);
    if (text::is_space(c)) {
      flush(at);
    } else if (start == std::string_view::npos) {
      start = at;
    }
  }
  flush(text.size());
  return out;
}

std::string normalize_surface(std::string_view text) {
  std::string out;
  for (const TokenSpan& tok : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += tok.normalized;
  }
  return out;
}

std::string make_path(std::string_view doc_id, std::string_view section_label,
                      std::size_t index) {
  return escape_component(doc_id) + "/" + escape_component(section_label) +
         "/" + std::to_string(index);
}

PathParts parse_path(std::string_view path) {
  const std::size_t last = path.rfind('/');
  if (last == std::string_view::npos || last == 0) {
    throw ParseError("malformed paragraph path: " + std::string(path));
  }
  const std::size_t mid = path.rfind('/', last - 1);
  if (mid == std::string_view::npos) {
    throw ParseError("malformed paragraph path: " + std::string(path));
  }
  PathParts parts;
  parts.doc_id = unescape_component(path.substr(0, mid));
  parts.section_label = unescape_component(path.substr(mid + 1, last - mid - 1));
  const std::string_view idx = path.substr(last + 1);
  const auto [ptr, ec] =
      std::from_chars(idx.data(), idx.data() + idx.size(), parts.index);
  if (ec != std::errc() || ptr != idx.data() + idx.size() || idx.empty()) {
    throw ParseError("malformed paragraph index in path: " + std::string(path));
  }
  return parts;
}

}  // namespace kgrag::corpus
