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

#include <algorithm>

#include "fake_model.hpp"
#include "kgrag/error.hpp"
#include "kgrag/extraction.hpp"

namespace kgrag::extraction {
namespace {

using providers::ChatClient;
using providers::EmbedClient;
using testing::live_config;
using testing::ScriptedTransport;

struct Fixture {
  std::shared_ptr<ScriptedTransport> script = std::make_shared<ScriptedTransport>();
  ChatClient chat{live_config(), script};
  EmbedClient embed{live_config(), script};
  prompts::PromptLibrary prompts = prompts::PromptLibrary::builtin();
  vocab::Vocabulary vocab = vocab::Vocabulary::from_entries({
      {"e:h", "hippocampus", "hippocampus", true, "t"},
      {"e:a", "amygdala", "amygdala", true, "t"},
      {"e:p", "peripheral neuron", "peripheral neuron", true, "t"},
  });
  linker::SurfaceIndex index{vocab};

  corpus::Paragraph paragraph(std::string text) {
    corpus::Paragraph p;
    p.path = "d/body/0";
    p.text = std::move(text);
    return p;
  }
};

std::vector<std::string> ids(const std::vector<linker::EntityMention>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.entity_id);
  std::sort(out.begin(), out.end());
  return out;
}

TEST(ParseList, StripsBulletsAndNumbering) {
  EXPECT_EQ(parse_list("- a\n* b\n1. c\n2) d\n\n\xE2\x80\xA2 e\n"),
            (std::vector<std::string>{"a", "b", "c", "d", "e"}));
  EXPECT_TRUE(parse_list("NONE").empty());
  EXPECT_TRUE(parse_list("[]").empty());
  EXPECT_THROW(parse_list("  \n"), ParseError);
}

TEST(SplitFields, TabThenPipe) {
  EXPECT_EQ(split_fields("a\tb\tc").size(), 3u);
  EXPECT_EQ(split_fields("a | b").size(), 2u);
}

TEST(LlmExtract, TwoSpans) {
  Fixture f;
  f.script->push("hippocampus\namygdala");
  const auto r = llm_extract_entities(f.paragraph("The hippocampus and the amygdala."), f.chat,
                                      f.prompts);
  ASSERT_EQ(r.spans.size(), 2u);
  EXPECT_EQ(r.spans[1].surface, "amygdala");
  EXPECT_EQ(r.dropped.total(), 0u);
}

TEST(LlmExtract, EmptyMarker) {
  Fixture f;
  f.script->push("NONE");
  EXPECT_TRUE(llm_extract_entities(f.paragraph("Nothing here."), f.chat, f.prompts).spans.empty());
}

TEST(LlmExtract, AbsentSpanDropped) {
  Fixture f;
  f.script->push("Hippocampus\ncerebellum");
  const auto r = llm_extract_entities(f.paragraph("the hippocampus"), f.chat, f.prompts);
  ASSERT_EQ(r.spans.size(), 1u);
  EXPECT_EQ(r.dropped.not_in_text, 1u);
}

TEST(LlmExtract, BlankOutputIsParseErrorWithRawText) {
  Fixture f;
  f.script->push("   ");
  EXPECT_THROW(llm_extract_entities(f.paragraph("x"), f.chat, f.prompts), ParseError);
}

TEST(Map, ExactHitWithoutEmbedding) {
  Fixture f;
  Disambiguator d(f.vocab, f.index, &f.embed);
  const auto r = d.map_to_standard({"Hippocampus", "p"});
  EXPECT_EQ(r.entity_id, "e:h");
  EXPECT_EQ(r.kind, MapKind::kExact);
  EXPECT_TRUE(f.script->bodies().empty());
}

TEST(Map, SimilarSurfaceMapsToExisting) {
  Fixture f;
  f.script->vectors["peripheral neuron"] = {1.0f, 0.0f, 0.0f};
  f.script->vectors["hippocampus"] = {0.0f, 1.0f, 0.0f};
  f.script->vectors["amygdala"] = {0.0f, 0.0f, 1.0f};
  f.script->vectors["peripheral neurons"] = {0.99f, 0.05f, 0.0f};
  Disambiguator d(f.vocab, f.index, &f.embed, 0.95);
  const auto r = d.map_to_standard({"peripheral neurons", "p"});
  EXPECT_EQ(r.entity_id, "e:p");
  EXPECT_EQ(r.kind, MapKind::kSimilar);
  EXPECT_GE(r.score, 0.95);
}

TEST(Map, NovelTermBecomesSyntheticEntity) {
  Fixture f;
  f.script->vectors["peripheral neuron"] = {1.0f, 0.0f, 0.0f};
  f.script->vectors["hippocampus"] = {0.0f, 1.0f, 0.0f};
  f.script->vectors["amygdala"] = {0.0f, 0.0f, 1.0f};
  f.script->vectors["grid cell"] = {0.6f, 0.6f, 0.5f};
  Disambiguator d(f.vocab, f.index, &f.embed, 0.95);
  const auto r = d.map_to_standard({"grid cell", "p"});
  EXPECT_EQ(r.kind, MapKind::kNew);
  EXPECT_TRUE(r.entity_id.starts_with(vocab::kSyntheticPrefix));
  EXPECT_EQ(f.vocab.standard_name_of("grid cell"), "grid cell");
  // Mapping the new standard name again is idempotent.
  EXPECT_EQ(d.map_to_standard({"grid cell", "p"}).entity_id, r.entity_id);
}

TEST(Combine, UnionConfirmedByFilter) {
  Fixture f;
  const auto text = "hippocampus amygdala peripheral neuron";
  const std::vector<linker::EntityMention> el{
      {"d/body/0", linker::TokenRange{0, 1}, "hippocampus", "e:h", 1.0, linker::Method::kFuzzy},
      {"d/body/0", linker::TokenRange{1, 2}, "amygdala", "e:a", 1.0, linker::Method::kFuzzy}};
  const std::vector<LlmSpan> llm{{"amygdala", "d/body/0"}, {"peripheral neuron", "d/body/0"}};
  Disambiguator d(f.vocab, f.index, nullptr);
  f.script->push("hippocampus\namygdala\nperipheral neuron");
  const auto all = combine_and_filter(text, "d/body/0", el, llm, d, f.chat, f.prompts);
  EXPECT_EQ(ids(all.mentions), (std::vector<std::string>{"e:a", "e:h", "e:p"}));
  EXPECT_TRUE(all.mentions[0].token_range.has_value());
  EXPECT_FALSE(all.mentions[2].token_range.has_value());

  f.script->push("hippocampus\namygdala");
  const auto two = combine_and_filter(text, "d/body/0", el, llm, d, f.chat, f.prompts);
  EXPECT_EQ(ids(two.mentions), (std::vector<std::string>{"e:a", "e:h"}));
  EXPECT_EQ(two.dropped.rejected, 1u);
}

TEST(Combine, FilterCannotInventEntities) {
  Fixture f;
  const std::vector<linker::EntityMention> el{
      {"d/body/0", linker::TokenRange{0, 1}, "hippocampus", "e:h", 1.0, linker::Method::kFuzzy}};
  Disambiguator d(f.vocab, f.index, nullptr);
  f.script->push("hippocampus\namygdala\nthalamus");
  const auto r = combine_and_filter("hippocampus", "d/body/0", el, {}, d, f.chat, f.prompts);
  EXPECT_EQ(ids(r.mentions), (std::vector<std::string>{"e:h"}));
  EXPECT_EQ(r.dropped.unknown_entity, 2u);
}

TEST(Combine, EmptyInputsNoCall) {
  Fixture f;
  Disambiguator d(f.vocab, f.index, nullptr);
  EXPECT_TRUE(combine_and_filter("x", "p", {}, {}, d, f.chat, f.prompts).mentions.empty());
  EXPECT_TRUE(f.script->bodies().empty());
}

TEST(Relations, OneTripleAndDescriptions) {
  Fixture f;
  f.script->push(
      "hippocampus\tamygdala\tThe hippocampus projects to the amygdala.\n"
      "hippocampus\tStores episodic memory.\n");
  const auto r = extract_relations(f.paragraph("..."), {{"e:h", "hippocampus"}, {"e:a", "amygdala"}},
                                   f.chat, f.prompts);
  ASSERT_EQ(r.relations.size(), 1u);
  EXPECT_EQ(r.relations[0].entity_a, "e:h");
  EXPECT_EQ(r.relations[0].paragraph_path, "d/body/0");
  ASSERT_EQ(r.descriptions.size(), 1u);
}

TEST(Relations, UnknownEntityDropped) {
  Fixture f;
  f.script->push("hippocampus\tthalamus\trelays\nhippocampus\thippocampus\tself\n");
  const auto r =
      extract_relations(f.paragraph("..."), {{"e:h", "hippocampus"}, {"e:a", "amygdala"}},
                        f.chat, f.prompts);
  EXPECT_TRUE(r.relations.empty());
  EXPECT_EQ(r.dropped.unknown_entity, 1u);
  EXPECT_EQ(r.dropped.self_relation, 1u);
}

TEST(Relations, SingleEntityGivesNoPairs) {
  Fixture f;
  f.script->push("hippocampus\tIs discussed.");
  const auto r = extract_relations(f.paragraph("..."), {{"e:h", "hippocampus"}}, f.chat, f.prompts);
  EXPECT_TRUE(r.relations.empty());
  EXPECT_EQ(r.descriptions.size(), 1u);
  EXPECT_THROW(extract_relations(f.paragraph("..."), {}, f.chat, f.prompts), ValidationError);
}

TEST(Spans, OnePerEntity) {
  Fixture f;
  f.script->push("hippocampus\tAbout memory.\namygdala\tAbout fear.\nhippocampus\tagain\n");
  const auto r = extract_entity_spans("c1", "ctx", {{"e:h", "hippocampus"}, {"e:a", "amygdala"}},
                                      f.chat, f.prompts);
  ASSERT_EQ(r.spans.size(), 2u);
  EXPECT_EQ(r.spans[0].context_id, "c1");
  EXPECT_EQ(r.dropped.duplicate, 1u);
}

TEST(Spans, UndiscussedEntityAndEmptyList) {
  Fixture f;
  f.script->push("amygdala\tAbout fear.");
  const auto r = extract_entity_spans("c1", "ctx", {{"e:h", "hippocampus"}, {"e:a", "amygdala"}},
                                      f.chat, f.prompts);
  ASSERT_EQ(r.spans.size(), 1u);
  EXPECT_EQ(r.spans[0].entity_id, "e:a");
  EXPECT_TRUE(extract_entity_spans("c", "t", {}, f.chat, f.prompts).spans.empty());
  EXPECT_EQ(f.script->remaining(), 0u);
}

TEST(Domain, KeepsYesContexts) {
  Fixture f;
  f.script->push("YES");
  f.script->push("No.");
  const auto kept = filter_domain({{"c1", "neurons"}, {"c2", "stocks"}}, f.chat, f.prompts);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "c1");
  EXPECT_TRUE(filter_domain({}, f.chat, f.prompts).empty());
  f.script->push("maybe");
  EXPECT_THROW(filter_domain({{"c", "x"}}, f.chat, f.prompts), ParseError);
}

TEST(Domain, ComposedStepNeedsEntities) {
  Fixture f;
  f.script->push("YES");
  f.script->push("YES");
  const auto kept = select_domain_contexts({{"c1", "hippocampus"}, {"c2", "synaptic noise"}},
                                           f.chat, f.prompts, [](const TextUnit& c) {
                                             return c.text.find("hippocampus") != std::string::npos;
                                           });
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "c1");
}

TEST(Pipeline, DeterministicAcrossRuns) {
  const auto run_once = [] {
    Fixture f;
    auto model = std::make_shared<testing::FakeModel>(std::vector<std::string>{"hippocampus", "grid cells"});
    ChatClient chat(live_config(), model);
    EmbedClient embed(live_config(), model);
    ExtractorOptions opts;
    opts.workers = 3;
    EntityExtractor ex(f.vocab, f.index, opts, &chat, &embed, f.prompts);
    std::vector<corpus::Paragraph> ps;
    for (int i = 0; i < 6; ++i) {
      auto p = f.paragraph("The hippocampus holds grid cells number " + std::to_string(i));
      p.path = "d/body/" + std::to_string(i);
      ps.push_back(p);
    }
    Json out = Json::array();
    for (const auto& r : ex.run(ps)) {
      for (const auto& m : r.mentions) out.push_back(to_json(m));
    }
    return out.dump();
  };
  const std::string first = run_once();
  EXPECT_EQ(first, run_once());
  EXPECT_NE(first.find("new:1"), std::string::npos);
}

TEST(Mentions, JsonRoundTrip) {
  const linker::EntityMention m{"d/s/0", linker::TokenRange{2, 4}, "Optic nerve", "e:o", 0.93,
                                linker::Method::kEmbed};
  EXPECT_EQ(mention_from_json(to_json(m)), m);
  linker::EntityMention llm = m;
  llm.token_range.reset();
  llm.method = linker::Method::kLlm;
  EXPECT_EQ(mention_from_json(to_json(llm)), llm);
}

}  // namespace
}  // namespace kgrag::extraction
