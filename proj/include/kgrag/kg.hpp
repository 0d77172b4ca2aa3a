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
#include <vector>

#include "kgrag/corpus.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/linker.hpp"
#include "kgrag/vocabulary.hpp"

// The knowledge graph: entity nodes and paragraph nodes, RELATED_TO edges
// between entities (each carrying the relation text and the paragraph it
// came from) and DESCRIBES edges from an entity to a paragraph node.
// Multi-edges are allowed. Traversal treats every edge as undirected.
namespace kgrag::kg {

enum class NodeKind { kEntity, kParagraph };
enum class EdgeLabel { kRelatedTo, kDescribes };

std::string_view label_name(EdgeLabel label);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::kEntity;
  std::string value;  // entity_name or paragraph_path
};

struct Edge {
  std::string id;
  EdgeLabel label = EdgeLabel::kRelatedTo;
  std::size_t src = 0;  // node indices
  std::size_t dst = 0;
  std::string relation_text;
  std::string paragraph_path;  // RELATED_TO: source paragraph; DESCRIBES: dst's path
};

struct DegreeCounts {
  std::size_t related = 0;
  std::size_t describes = 0;
  std::size_t total() const { return related + describes; }
};

struct DegreeRow {
  std::string node_id;
  std::string entity_name;
  DegreeCounts degree;
};

class Graph {
 public:
  // Builders; each validates endpoint kinds and uniqueness and returns the
  // new element's index.
  std::size_t add_entity(std::string id, std::string entity_name);
  std::size_t add_paragraph(std::string id, std::string paragraph_path);
  std::size_t add_related(std::string id, std::size_t src, std::size_t dst,
                          std::string relation_text, std::string paragraph_path);
  std::size_t add_describes(std::string id, std::size_t entity, std::size_t paragraph,
                            std::string relation_text);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t entity_count() const { return entity_count_; }
  std::size_t paragraph_count() const { return nodes_.size() - entity_count_; }
  bool empty() const { return nodes_.empty() && edges_.empty(); }

  std::optional<std::size_t> find_node(std::string_view id) const;
  std::optional<std::size_t> find_entity(std::string_view entity_name) const;
  std::optional<std::size_t> find_paragraph(std::string_view path) const;
  // Throws ValidationError for an unknown id.
  std::size_t node_index(std::string_view id) const;

  // Edge indices incident to a node, in insertion order.
  const std::vector<std::size_t>& incident(std::size_t node) const { return incident_[node]; }

  DegreeCounts degree(std::size_t node) const;
  DegreeCounts degree(std::string_view node_id) const { return degree(node_index(node_id)); }

 private:
  std::size_t add_node(std::string id, NodeKind kind, std::string value);
  std::size_t add_edge(Edge e);

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> incident_;
  std::unordered_map<std::string, std::size_t> node_ids_;
  std::unordered_map<std::string, std::size_t> edge_ids_;
  std::unordered_map<std::string, std::size_t> entity_names_;
  std::unordered_map<std::string, std::size_t> paragraph_paths_;
  std::size_t entity_count_ = 0;
};

struct GraphInputs {
  const std::vector<corpus::Paragraph>* paragraphs = nullptr;
  const std::vector<linker::EntityMention>* mentions = nullptr;
  const std::vector<extraction::RelationSpan>* relations = nullptr;
  const std::vector<extraction::EntityDescription>* descriptions = nullptr;
  const vocab::Vocabulary* vocab = nullptr;
};

// One entity node per distinct standard entity (first-appearance order:
// mentions, then relation endpoints, then descriptions); one paragraph node
// per paragraph hosting a mention or a description (corpus order); one
// RELATED_TO edge per relation and one DESCRIBES edge per description.
// Throws ValidationError naming any dangling paragraph path or unknown
// entity id.
Graph build_graph(const GraphInputs& in);

inline constexpr int kGraphSchemaVersion = 1;

// Writes nodes.jsonl and edges.jsonl, each opening with a schema header.
void persist(const Graph& graph, const std::filesystem::path& dir);
// Throws ParseError (with file and line) for corrupt records and
// ValidationError for schema-version mismatch or broken references.
Graph load(const std::filesystem::path& dir);

// Entity rankings by total degree; ties broken by entity name.
std::vector<DegreeRow> top_degree(const Graph& graph, std::size_t k);
std::vector<DegreeRow> bottom_degree(const Graph& graph, std::size_t k);

// RELATED_TO edges lying on a path of length 1 or 2 between two distinct
// entity nodes (intermediates are entity nodes). Sorted edge indices.
std::vector<std::size_t> paths_up_to_2(const Graph& graph, std::size_t v1, std::size_t v2);

}  // namespace kgrag::kg
