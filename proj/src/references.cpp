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

#include "kgrag/references.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>

#include "kgrag/error.hpp"
#include "kgrag/parallel.hpp"
#include "kgrag/text.hpp"

namespace kgrag::eval {
namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string strip_bullet(std::string_view line) {
  std::string s = text::trim(line);
  std::size_t i = 0;
  while (i < s.size() && (s[i] == '-' || s[i] == '*' || s[i] == ' ')) ++i;
  std::size_t j = i;
  while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
  if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')')) i = j + 1;
  return text::trim(std::string_view(s).substr(i));
}

bool plausible_doi(const std::string& doi) {
  return doi.starts_with("10.") && doi.find('/') != std::string::npos &&
         doi.find(' ') == std::string::npos;
}

std::string pct_text(double pct) {
  char buf[32];
  if (pct == std::floor(pct)) {
    std::snprintf(buf, sizeof buf, "%.0f%%", pct);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f%%", pct);
  }
  return buf;
}

double pct(std::size_t n, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(total);
}

std::optional<PaperRecord> record_from(const Json& j) {
  if (!j.is_object() || !j.contains("title") || !j["title"].is_string()) return std::nullopt;
  PaperRecord r;
  r.title = j["title"].get<std::string>();
  if (j.contains("externalIds") && j["externalIds"].is_object() &&
      j["externalIds"].contains("DOI") && j["externalIds"]["DOI"].is_string()) {
    r.doi = normalize_doi(j["externalIds"]["DOI"].get<std::string>());
  }
  return r;
}

}  // namespace

std::string normalize_doi(std::string_view doi) {
  std::string s = ascii_lower(text::trim(doi));
  for (std::string_view prefix :
       {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
        "doi.org/", "doi:"}) {
    if (s.starts_with(prefix)) {
      s.erase(0, prefix.size());
      break;
    }
  }
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) s.pop_back();
  return s;
}

std::string normalize_title(std::string_view title) {
  std::u32string out;
  bool space = true;
  for (char32_t c : text::decode_utf8(title)) {
    if (text::is_space(c) || text::is_punct(c)) {
      if (!space) out.push_back(U' ');
      space = true;
    } else {
      out.push_back(text::to_lower(c));
      space = false;
    }
  }
  if (!out.empty() && out.back() == U' ') out.pop_back();
  return text::encode_utf8(out);
}

ReferenceExtraction extract_references(std::string_view answer) {
  ReferenceExtraction out;
  std::size_t pos = 0;
  while (pos < answer.size()) {
    std::size_t nl = answer.find('\n', pos);
    if (nl == std::string_view::npos) nl = answer.size();
    const std::string line = strip_bullet(answer.substr(pos, nl - pos));
    pos = nl + 1;
    const std::string lower = ascii_lower(line);
    const std::size_t t = lower.find("title:");
    const std::size_t d = lower.find("doi:", t == std::string::npos ? 0 : t);
    if (t == std::string::npos && d == std::string::npos) continue;

    ClaimedReference ref;
    if (t != std::string::npos) {
      std::size_t end = d == std::string::npos ? line.size() : d;
      std::string title = text::trim(std::string_view(line).substr(t + 6, end - t - 6));
      while (!title.empty() && (title.back() == '|' || title.back() == ',' || title.back() == ';')) {
        title.pop_back();
        title = text::trim(title);
      }
      ref.title = title;
    }
    if (d != std::string::npos) ref.doi = normalize_doi(std::string_view(line).substr(d + 4));
    if (ref.title.empty() || !plausible_doi(ref.doi)) {
      out.malformed.push_back(line);
    } else {
      out.refs.push_back(std::move(ref));
    }
  }
  return out;
}

// --- fixture database -------------------------------------------------------

FixtureBiblio::FixtureBiblio(std::vector<PaperRecord> papers) : papers_(std::move(papers)) {
  for (PaperRecord& p : papers_) p.doi = normalize_doi(p.doi);
}

FixtureBiblio FixtureBiblio::load(const std::filesystem::path& path) {
  std::vector<PaperRecord> papers;
  io::for_each_jsonl(path, [&](std::size_t line_no, const Json& rec) {
    if (!rec.is_object() || !rec.contains("doi") || !rec.contains("title") ||
        !rec["doi"].is_string() || !rec["title"].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected {\"doi\",\"title\"} strings");
    }
    papers.push_back({rec["doi"].get<std::string>(), rec["title"].get<std::string>()});
  });
  return FixtureBiblio(std::move(papers));
}

std::optional<PaperRecord> FixtureBiblio::by_doi(const std::string& doi) {
  const std::string key = normalize_doi(doi);
  for (const PaperRecord& p : papers_) {
    if (p.doi == key) return p;
  }
  return std::nullopt;
}

std::optional<PaperRecord> FixtureBiblio::closest_title(const std::string& title) {
  const std::string key = normalize_title(title);
  const PaperRecord* best = nullptr;
  double best_sim = -1.0;
  for (const PaperRecord& p : papers_) {
    const double sim = text::normalized_similarity(key, normalize_title(p.title));
    if (sim > best_sim) {
      best_sim = sim;
      best = &p;
    }
  }
  if (best == nullptr || best_sim < kSearchFloor) return std::nullopt;
  return *best;
}

// --- Semantic Scholar ---------------------------------------------------------

SemanticScholarBiblio::SemanticScholarBiblio(providers::ProviderConfig cfg,
                                             std::shared_ptr<providers::Transport> transport)
    : ProviderClient(std::move(cfg), std::move(transport)) {
  // The service reads its key from x-api-key rather than a bearer token.
  for (auto& [name, value] : headers_) {
    if (name == "Authorization" && value.starts_with("Bearer ")) {
      name = "x-api-key";
      value.erase(0, 7);
    }
  }
}

std::optional<Json> SemanticScholarBiblio::lookup(const std::string& path,
                                                  const providers::QueryParams& params) {
  Json p = Json::array();
  for (const auto& [k, v] : params) p.push_back({k, v});
  const std::string hash =
      text::sha256_hex(Json{{"kind", "biblio"}, {"path", path}, {"params", p}}.dump());
  if (cfg_.mode != providers::Mode::kLive) {
    if (auto hit = fixtures_.chat(hash)) {
      ++fixture_hits_;
      const Json j = Json::parse(*hit);
      if (j.is_null()) return std::nullopt;
      return std::optional<Json>(std::in_place, j);
    }
    if (cfg_.mode == providers::Mode::kReplay) {
      throw FixtureMissing("no recorded bibliographic response for " + path, hash);
    }
  }
  std::optional<Json> res = get_with_retry(path, params);
  if (cfg_.mode == providers::Mode::kRecord) {
    fixtures_.put_chat(hash, res ? res->dump() : "null");
  }
  return res;
}

std::optional<PaperRecord> SemanticScholarBiblio::by_doi(const std::string& doi) {
  const auto res = lookup("/graph/v1/paper/DOI:" + normalize_doi(doi),
                          {{"fields", "title,externalIds"}});
  if (!res) return std::nullopt;
  return record_from(*res);
}

std::optional<PaperRecord> SemanticScholarBiblio::closest_title(const std::string& title) {
  const auto res =
      lookup("/graph/v1/paper/search/match", {{"query", title}, {"fields", "title,externalIds"}});
  if (!res || !res->contains("data") || !(*res)["data"].is_array() || (*res)["data"].empty()) {
    return std::nullopt;
  }
  return record_from((*res)["data"][0]);
}

// --- checking ---------------------------------------------------------------

std::string_view status_name(RefStatus s) {
  switch (s) {
    case RefStatus::kVerified:
      return "verified";
    case RefStatus::kTitleMismatch:
      return "title_mismatch";
    case RefStatus::kNotFound:
      return "not_found";
    case RefStatus::kError:
      return "error";
  }
  return "error";
}

double ReferenceSummary::incorrect_doi_pct() const {
  return pct(doi_not_found + doi_title_mismatch, total);
}

double ReferenceSummary::incorrect_title_pct() const {
  return pct(title_not_found + title_mismatch, total);
}

ReferenceCheck check_references(const std::vector<ClaimedReference>& refs, BiblioClient& biblio,
                                std::size_t workers) {
  ReferenceCheck out;
  out.records.resize(refs.size());
  parallel_for(refs.size(), workers, [&](std::size_t i) {
    const ClaimedReference& ref = refs[i];
    ReferenceRecord& r = out.records[i];
    r.claimed_title = ref.title;
    r.claimed_doi = ref.doi;
    const std::string claimed = normalize_title(ref.title);
    try {
      if (const auto hit = biblio.by_doi(ref.doi)) {
        r.doi_match_title = hit->title;
        r.doi_status = normalize_title(hit->title) == claimed ? RefStatus::kVerified
                                                              : RefStatus::kTitleMismatch;
      } else {
        r.doi_status = RefStatus::kNotFound;
      }
    } catch (const TransportError& e) {
      r.doi_status = RefStatus::kError;
      r.error = e.what();
    }
    try {
      if (const auto hit = biblio.closest_title(ref.title)) {
        r.title_match_title = hit->title;
        r.title_match_doi = hit->doi;
        r.title_similarity = text::normalized_similarity(claimed, normalize_title(hit->title));
        r.title_status = r.title_similarity >= kTitleMatchThreshold ? RefStatus::kVerified
                                                                    : RefStatus::kTitleMismatch;
      } else {
        r.title_status = RefStatus::kNotFound;
      }
    } catch (const TransportError& e) {
      r.title_status = RefStatus::kError;
      if (!r.error.empty()) r.error += "; ";
      r.error += e.what();
    }
  });

  ReferenceSummary& s = out.summary;
  s.total = out.records.size();
  for (const ReferenceRecord& r : out.records) {
    s.doi_not_found += r.doi_status == RefStatus::kNotFound;
    s.doi_title_mismatch += r.doi_status == RefStatus::kTitleMismatch;
    s.doi_errors += r.doi_status == RefStatus::kError;
    s.title_not_found += r.title_status == RefStatus::kNotFound;
    s.title_mismatch += r.title_status == RefStatus::kTitleMismatch;
    s.title_errors += r.title_status == RefStatus::kError;
  }
  return out;
}

Json to_json(const ReferenceRecord& r) {
  Json j{{"claimed_title", r.claimed_title},
         {"claimed_doi", r.claimed_doi},
         {"doi_status", status_name(r.doi_status)},
         {"title_status", status_name(r.title_status)},
         {"doi_match_title", r.doi_match_title},
         {"title_match_title", r.title_match_title},
         {"title_match_doi", r.title_match_doi},
         {"title_similarity", r.title_similarity}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

Json to_json(const ReferenceSummary& s) {
  return {{"total", s.total},
          {"doi", {{"not_found", s.doi_not_found},
                   {"title_mismatch", s.doi_title_mismatch},
                   {"incorrect", s.doi_not_found + s.doi_title_mismatch},
                   {"incorrect_pct", s.incorrect_doi_pct()},
                   {"errors", s.doi_errors}}},
          {"title", {{"not_found", s.title_not_found},
                     {"title_mismatch", s.title_mismatch},
                     {"incorrect", s.title_not_found + s.title_mismatch},
                     {"incorrect_pct", s.incorrect_title_pct()},
                     {"errors", s.title_errors}}}};
}

std::string summary_table(const ReferenceSummary& s, std::string_view model) {
  const auto row = [](std::string_view by, std::string_view type, const std::string& value) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-22s%-26s%s\n", std::string(by).c_str(),
                  std::string(type).c_str(), value.c_str());
    return std::string(buf);
  };
  std::string out = row("Search By", "Reference Type", std::string(model));
  out += row("--", "Total Cited References", std::to_string(s.total));
  out += row("DOI", "Not Found", std::to_string(s.doi_not_found));
  out += row("", "Title Mismatch", std::to_string(s.doi_title_mismatch));
  out += row("", "Incorrect DOIs (%)",
             std::to_string(s.doi_not_found + s.doi_title_mismatch) + " (" +
                 pct_text(s.incorrect_doi_pct()) + ")");
  out += row("Title (Closest Match)", "Not Found", std::to_string(s.title_not_found));
  out += row("", "Title Mismatch", std::to_string(s.title_mismatch));
  out += row("", "Incorrect Titles (%)",
             std::to_string(s.title_not_found + s.title_mismatch) + " (" +
                 pct_text(s.incorrect_title_pct()) + ")");
  if (s.doi_errors + s.title_errors > 0) {
    out += row("--", "Lookup Errors", std::to_string(s.doi_errors + s.title_errors));
  }
  return out;
}

}  // namespace kgrag::eval
