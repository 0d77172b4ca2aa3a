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

#include <gtest/gtest.h>

#include "fake_model.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag::corpus {
namespace {

using testing::TempDir;
using testing::write_text;

Document doc_with(std::vector<Section> sections, DocumentKind kind = DocumentKind::kFulltext) {
  return Document{"d1", "Title", kind, std::move(sections)};
}

TEST(Ingest, EmptyFileGivesNoDocuments) {
  TempDir dir;
  write_text(dir / "c.jsonl", "");
  EXPECT_TRUE(ingest_corpus(dir / "c.jsonl").empty());
}

TEST(Ingest, ReadsSectionsInOrder) {
  TempDir dir;
  write_text(dir / "c.jsonl",
             R"({"doc_id":"a","title":"T","kind":"fulltext","sections":[{"label":"intro","text":"x"},{"label":"methods","text":"y"}]})"
             "\n");
  const auto docs = ingest_corpus(dir / "c.jsonl");
  ASSERT_EQ(docs.size(), 1u);
  ASSERT_EQ(docs[0].sections.size(), 2u);
  EXPECT_EQ(docs[0].sections[1].label, "methods");
}

TEST(Ingest, DuplicateIdCitesBothLines) {
  TempDir dir;
  std::string content;
  for (int i = 1; i <= 7; ++i) {
    const std::string id = (i == 3 || i == 7) ? "dup" : "doc" + std::to_string(i);
    content += R"({"doc_id":")" + id +
               R"(","title":"T","kind":"abstract","sections":[{"label":"abstract","text":"t"}]})" +
               "\n";
  }
  write_text(dir / "c.jsonl", content);
  try {
    ingest_corpus(dir / "c.jsonl");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("7"), std::string::npos) << msg;
  }
}

TEST(Ingest, MalformedLineNamed) {
  TempDir dir;
  write_text(dir / "c.jsonl",
             R"({"doc_id":"a","title":"T","kind":"fulltext","sections":[]})"
             "\n{not json\n");
  try {
    ingest_corpus(dir / "c.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Ingest, AbstractWithTwoSectionsRejected) {
  TempDir dir;
  write_text(dir / "c.jsonl",
             R"({"doc_id":"a","title":"T","kind":"abstract","sections":[{"label":"a","text":"x"},{"label":"b","text":"y"}]})"
             "\n");
  EXPECT_THROW(ingest_corpus(dir / "c.jsonl"), Error);
}

TEST(Split, SingleBlockIsOneParagraph) {
  const auto ps = split_paragraphs(doc_with({{"intro", "one line\nsecond line"}}));
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].path, "d1/intro/0");
}

TEST(Split, BlankLinesSeparateBlocks) {
  const auto ps = split_paragraphs(doc_with({{"intro", "first\n\n  \nsecond\n"}}));
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps[0].path, "d1/intro/0");
  EXPECT_EQ(ps[1].path, "d1/intro/1");
  EXPECT_EQ(ps[1].text, "second");
}

TEST(Split, AbstractBlocksCounted) {
  const std::string text = "a\n\nb\n\nc\n\n\n\nd";
  const auto ps = split_paragraphs(doc_with({{"abstract", text}}, DocumentKind::kAbstract));
  // Oracle: blocks are maximal runs of non-blank lines.
  std::size_t blocks = 0;
  bool in_block = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      const bool blank = text.substr(start, i - start).find_first_not_of(" \t") == std::string::npos;
      if (!blank && !in_block) ++blocks;
      in_block = !blank;
      start = i + 1;
    }
  }
  EXPECT_EQ(ps.size(), blocks);
  for (const auto& p : ps) EXPECT_EQ(p.section_label, "abstract");
}

TEST(Split, EmptySectionYieldsNothing) {
  EXPECT_TRUE(split_paragraphs(doc_with({{"intro", "\n\n"}})).empty());
}

TEST(Split, RepeatedLabelsKeepPathsUnique) {
  const auto ps = split_paragraphs(doc_with({{"results", "a"}, {"results", "b"}}));
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_NE(ps[0].path, ps[1].path);
}

TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, OffsetsAndNormalization) {
  const auto t = tokenize("The hippocampus.");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (TokenSpan{0, 3, "The", "the"}));
  EXPECT_EQ(t[1], (TokenSpan{4, 16, "hippocampus.", "hippocampus"}));
}

TEST(Tokenize, InternalHyphenKept) {
  const auto t = tokenize("5-HT1A receptor");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].normalized, "5-ht1a");
}

TEST(Tokenize, PunctuationOnlyTokensDropped) {
  const auto t = tokenize("cortex - and \xE2\x80\x94 thalamus");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[2].normalized, "thalamus");
}

TEST(Tokenize, UnicodeWhitespaceSplits) {
  const auto t = tokenize("optic\xC2\xA0nerve\xE2\x80\x83tract");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1].surface, "nerve");
}

TEST(Tokenize, OffsetsIncreasingAndSlicesMatch) {
  const std::string text = "  Dopaminergic (neurons), of the  substantia-nigra; degenerate!  ";
  const auto t = tokenize(text);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(text.substr(t[i].start_char, t[i].end_char - t[i].start_char), t[i].surface);
    EXPECT_LT(t[i].start_char, t[i].end_char);
    if (i > 0) EXPECT_LE(t[i - 1].end_char, t[i].start_char);
    EXPECT_EQ(kgrag::text::normalize_token(t[i].normalized), t[i].normalized);
  }
}

TEST(Path, RoundTripsWithEscapes) {
  for (const auto& [doc, label, idx] :
       std::vector<std::tuple<std::string, std::string, std::size_t>>{
           {"pmc1", "intro", 0}, {"a/b", "50% done", 12}, {"x", "r/s%2F", 3}}) {
    const std::string p = make_path(doc, label, idx);
    EXPECT_EQ(parse_path(p), (PathParts{doc, label, idx}));
  }
}

TEST(Path, MalformedRejected) {
  EXPECT_THROW(parse_path("a/b"), Error);
  EXPECT_THROW(parse_path("a/b/x"), Error);
}

}  // namespace
}  // namespace kgrag::corpus
