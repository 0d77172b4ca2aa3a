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
#include <map>
#include <random>

#include "fake_model.hpp"
#include "kgrag/error.hpp"
#include "kgrag/kg.hpp"
#include "oracles.hpp"

namespace kgrag::kg {
namespace {

using testing::TempDir;

struct Inputs {
  std::vector<corpus::Paragraph> paragraphs;
  std::vector<linker::EntityMention> mentions;
  std::vector<extraction::RelationSpan> relations;
  std::vector<extraction::EntityDescription> descriptions;
  vocab::Vocabulary vocab = vocab::Vocabulary::from_entries({
      {"e:h", "hippocampus", "Hippocampus", true, "t"},
      {"e:a", "amygdala", "Amygdala", true, "t"},
      {"e:t", "thalamus", "Thalamus", true, "t"},
  });

  Inputs() {
    for (int i = 0; i < 3; ++i) {
      corpus::Paragraph p;
      p.doc_id = "d";
      p.section_label = "body";
      p.index = static_cast<std::size_t>(i);
      p.path = "d/body/" + std::to_string(i);
      p.text = "text " + std::to_string(i);
      paragraphs.push_back(p);
    }
  }
  void mention(const std::string& path, const std::string& id) {
    mentions.push_back({path, std::nullopt, id, id, 1.0, linker::Method::kLlm});
  }
  Graph build() const {
    GraphInputs in{&paragraphs, &mentions, &relations, &descriptions, &vocab};
    return build_graph(in);
  }
};

using Multiset = std::multiset<std::string>;

Multiset node_set(const Graph& g) {
  Multiset out;
  for (const auto& n : g.nodes()) out.insert(n.id + "|" + std::to_string(int(n.kind)) + "|" + n.value);
  return out;
}

Multiset edge_set(const Graph& g) {
  Multiset out;
  for (const auto& e : g.edges()) {
    out.insert(e.id + "|" + std::string(label_name(e.label)) + "|" + g.nodes()[e.src].id + "|" +
               g.nodes()[e.dst].id + "|" + e.relation_text + "|" + e.paragraph_path);
  }
  return out;
}

TEST(Build, NoMentionsEmptyGraph) {
  Inputs in;
  EXPECT_TRUE(in.build().empty());
}

TEST(Build, OneRelationCounts) {
  Inputs in;
  in.mention("d/body/0", "e:h");
  in.mention("d/body/0", "e:a");
  in.relations.push_back({"e:h", "e:a", "projects to", "d/body/0"});
  in.descriptions.push_back({"e:h", "is discussed", "d/body/0"});
  in.descriptions.push_back({"e:a", "is discussed", "d/body/0"});
  const Graph g = in.build();
  EXPECT_EQ(g.entity_count(), 2u);
  EXPECT_EQ(g.paragraph_count(), 1u);
  std::size_t related = 0;
  for (const auto& e : g.edges()) related += e.label == EdgeLabel::kRelatedTo;
  EXPECT_EQ(related, 1u);
  EXPECT_EQ(g.edges().size() - related, 2u);
  EXPECT_EQ(g.nodes()[*g.find_entity("Hippocampus")].value, "Hippocampus");
}

TEST(Build, SamePairTwoParagraphsMultiEdge) {
  Inputs in;
  in.relations.push_back({"e:h", "e:a", "r1", "d/body/0"});
  in.relations.push_back({"e:h", "e:a", "r2", "d/body/1"});
  const Graph g = in.build();
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.degree(*g.find_entity("Hippocampus")).related, 2u);
}

TEST(Build, DanglingPathNamed) {
  Inputs in;
  in.relations.push_back({"e:h", "e:a", "r", "d/body/9"});
  try {
    in.build();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("d/body/9"), std::string::npos);
  }
}

TEST(Build, UnknownEntityRejected) {
  Inputs in;
  in.mention("d/body/0", "e:zz");
  EXPECT_THROW(in.build(), ValidationError);
}

TEST(Graph, BuilderInvariants) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto p = g.add_paragraph("p1", "d/s/0");
  EXPECT_THROW(g.add_entity("e1", "B"), ValidationError);
  EXPECT_THROW(g.add_entity("e2", "A"), ValidationError);
  EXPECT_THROW(g.add_related("r1", a, a, "self", "d/s/0"), ValidationError);
  EXPECT_THROW(g.add_related("r1", a, p, "x", "d/s/0"), ValidationError);
  EXPECT_THROW(g.add_describes("d1", p, a, "x"), ValidationError);
  EXPECT_THROW(g.degree("nope"), ValidationError);
}

TEST(Degree, CountsIncidentEdges) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto b = g.add_entity("e2", "B");
  const auto c = g.add_entity("e3", "C");
  const auto iso = g.add_entity("e4", "D");
  const auto p = g.add_paragraph("p1", "d/s/0");
  g.add_related("r1", a, b, "x", "d/s/0");
  g.add_related("r2", c, a, "y", "d/s/0");
  g.add_describes("d1", a, p, "z");
  EXPECT_EQ(g.degree(a).total(), 3u);
  EXPECT_EQ(g.degree(a).related, 2u);
  EXPECT_EQ(g.degree(iso).total(), 0u);
}

TEST(Degree, MatchesBruteForceAndRanking) {
  std::mt19937_64 rng(5);
  const Graph g = testing::random_graph(rng, 30, 10, 120);
  for (std::size_t n = 0; n < g.nodes().size(); ++n) {
    std::size_t count = 0;
    for (const auto& e : g.edges()) count += (e.src == n) + (e.dst == n);
    EXPECT_EQ(g.degree(n).total(), count);
  }
  const auto top = top_degree(g, 5);
  const auto bottom = bottom_degree(g, 5);
  ASSERT_EQ(top.size(), 5u);
  for (std::size_t i = 1; i < top.size(); ++i) {
    EXPECT_TRUE(top[i - 1].degree.total() > top[i].degree.total() ||
                (top[i - 1].degree.total() == top[i].degree.total() &&
                 top[i - 1].entity_name < top[i].entity_name));
    EXPECT_TRUE(bottom[i - 1].degree.total() < bottom[i].degree.total() ||
                (bottom[i - 1].degree.total() == bottom[i].degree.total() &&
                 bottom[i - 1].entity_name < bottom[i].entity_name));
  }
  std::size_t max_degree = 0;
  for (std::size_t n = 0; n < g.nodes().size(); ++n) {
    if (g.nodes()[n].kind == NodeKind::kEntity) max_degree = std::max(max_degree, g.degree(n).total());
  }
  EXPECT_EQ(top[0].degree.total(), max_degree);
}

TEST(Paths, DirectEdgeOnly) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto b = g.add_entity("e2", "B");
  g.add_related("r1", a, b, "x", "p");
  EXPECT_EQ(paths_up_to_2(g, a, b), (std::vector<std::size_t>{0}));
}

TEST(Paths, TriangleAllThree) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto b = g.add_entity("e2", "B");
  const auto c = g.add_entity("e3", "C");
  g.add_related("r1", a, c, "x", "p");
  g.add_related("r2", c, b, "x", "p");
  g.add_related("r3", a, b, "x", "p");
  EXPECT_EQ(paths_up_to_2(g, a, b), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Paths, LengthThreeGivesNothing) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto b = g.add_entity("e2", "B");
  const auto c = g.add_entity("e3", "C");
  const auto d = g.add_entity("e4", "D");
  g.add_related("r1", a, c, "x", "p");
  g.add_related("r2", c, d, "x", "p");
  g.add_related("r3", d, b, "x", "p");
  EXPECT_TRUE(paths_up_to_2(g, a, b).empty());
  EXPECT_THROW(paths_up_to_2(g, a, a), ValidationError);
}

TEST(Paths, ParagraphNodesNeverIntermediate) {
  Graph g;
  const auto a = g.add_entity("e1", "A");
  const auto b = g.add_entity("e2", "B");
  const auto p = g.add_paragraph("p1", "d/s/0");
  g.add_describes("d1", a, p, "x");
  g.add_describes("d2", b, p, "x");
  EXPECT_TRUE(paths_up_to_2(g, a, b).empty());
  EXPECT_THROW(paths_up_to_2(g, a, p), ValidationError);
}

TEST(Paths, MatchesDoubleBfsOnRandomGraphs) {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 20; ++round) {
    const Graph g = testing::random_graph(rng, 2 + rng() % 40, rng() % 10, rng() % 150);
    for (int q = 0; q < 10; ++q) {
      const std::size_t v1 = rng() % g.entity_count();
      std::size_t v2 = rng() % g.entity_count();
      if (v1 == v2) continue;
      const auto got = paths_up_to_2(g, v1, v2);
      const auto want = testing::double_bfs_paths(g, v1, v2);
      EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), want);
    }
  }
}

TEST(Persist, EmptyRoundTrip) {
  TempDir dir;
  persist(Graph{}, dir / "g");
  EXPECT_TRUE(load(dir / "g").empty());
}

TEST(Persist, RandomRoundTripKeepsMultisets) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const Graph g = testing::random_graph(rng, 70, 30, 400);
  persist(g, dir / "g");
  const Graph back = load(dir / "g");
  EXPECT_EQ(node_set(back), node_set(g));
  EXPECT_EQ(edge_set(back), edge_set(g));
  for (std::size_t n = 0; n < g.nodes().size(); ++n) {
    EXPECT_EQ(back.degree(g.nodes()[n].id).total(), g.degree(n).total());
  }
}

TEST(Persist, CorruptLineReportsLineNumber) {
  TempDir dir;
  std::mt19937_64 rng(2);
  persist(testing::random_graph(rng, 5, 2, 5), dir / "g");
  std::string nodes = testing::read_text(dir / "g" / "nodes.jsonl");
  const auto second_nl = nodes.find('\n', nodes.find('\n') + 1);
  nodes.insert(second_nl + 1, "{\"id\":\n");
  testing::write_text(dir / "g" / "nodes.jsonl", nodes);
  try {
    load(dir / "g");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("nodes.jsonl:3"), std::string::npos) << e.what();
  }
}

TEST(Persist, SchemaVersionMismatch) {
  TempDir dir;
  persist(Graph{}, dir / "g");
  testing::write_text(dir / "g" / "edges.jsonl",
                      R"({"schema":"kgrag.graph.edges","version":99})" "\n");
  EXPECT_THROW(load(dir / "g"), ValidationError);
}

TEST(Persist, EdgeToUnknownNodeRejected) {
  TempDir dir;
  Graph g;
  g.add_entity("e1", "A");
  g.add_entity("e2", "B");
  g.add_related("r1", 0, 1, "x", "p");
  persist(g, dir / "g");
  std::string edges = testing::read_text(dir / "g" / "edges.jsonl");
  edges.replace(edges.find("\"e2\""), 4, "\"e9\"");
  testing::write_text(dir / "g" / "edges.jsonl", edges);
  EXPECT_THROW(load(dir / "g"), Error);
}

}  // namespace
}  // namespace kgrag::kg
