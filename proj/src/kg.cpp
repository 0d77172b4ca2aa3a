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

#include "kgrag/kg.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"

namespace kgrag::kg {
namespace {

constexpr std::string_view kNodesSchema = "kgrag.graph.nodes";
constexpr std::string_view kEdgesSchema = "kgrag.graph.edges";

void check_header(const Json& rec, std::string_view schema, const std::string& where) {
  if (!rec.is_object() || !rec.contains("schema") || !rec.contains("version")) {
    throw ParseError(where + ": missing schema header");
  }
  if (rec["schema"] != schema) {
    throw ValidationError(where + ": expected schema '" + std::string(schema) + "'");
  }
  if (rec["version"] != kGraphSchemaVersion) {
    throw ValidationError(where + ": schema version mismatch (file " +
                          rec["version"].dump() + ", supported " +
                          std::to_string(kGraphSchemaVersion) + ")");
  }
}

std::string str_field(const Json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_string()) {
    throw ParseError(where + ": missing string field '" + key + "'");
  }
  return rec[key].get<std::string>();
}

std::vector<DegreeRow> entity_rows(const Graph& g) {
  std::vector<DegreeRow> rows;
  rows.reserve(g.entity_count());
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const Node& n = g.nodes()[i];
    if (n.kind == NodeKind::kEntity) rows.push_back({n.id, n.value, g.degree(i)});
  }
  return rows;
}

}  // namespace

std::string_view label_name(EdgeLabel label) {
  return label == EdgeLabel::kDescribes ? "DESCRIBES" : "RELATED_TO";
}

// --- Graph --------------------------------------------------------------------

std::size_t Graph::add_node(std::string id, NodeKind kind, std::string value) {
  if (id.empty()) throw ValidationError("node id must be non-empty");
  if (node_ids_.contains(id)) throw ValidationError("duplicate node id '" + id + "'");
  auto& by_value = kind == NodeKind::kEntity ? entity_names_ : paragraph_paths_;
  if (by_value.contains(value)) {
    throw ValidationError(std::string(kind == NodeKind::kEntity ? "entity name '"
                                                                : "paragraph path '") +
                          value + "' already has a node");
  }
  const std::size_t idx = nodes_.size();
  node_ids_.emplace(id, idx);
  by_value.emplace(value, idx);
  nodes_.push_back({std::move(id), kind, std::move(value)});
  incident_.emplace_back();
  if (kind == NodeKind::kEntity) ++entity_count_;
  return idx;
}

std::size_t Graph::add_entity(std::string id, std::string entity_name) {
  if (entity_name.empty()) throw ValidationError("entity name must be non-empty");
  return add_node(std::move(id), NodeKind::kEntity, std::move(entity_name));
}

std::size_t Graph::add_paragraph(std::string id, std::string paragraph_path) {
  if (paragraph_path.empty()) throw ValidationError("paragraph path must be non-empty");
  return add_node(std::move(id), NodeKind::kParagraph, std::move(paragraph_path));
}

std::size_t Graph::add_edge(Edge e) {
  if (e.id.empty()) throw ValidationError("edge id must be non-empty");
  if (edge_ids_.contains(e.id)) throw ValidationError("duplicate edge id '" + e.id + "'");
  const std::size_t idx = edges_.size();
  edge_ids_.emplace(e.id, idx);
  incident_[e.src].push_back(idx);
  incident_[e.dst].push_back(idx);
  edges_.push_back(std::move(e));
  return idx;
}

std::size_t Graph::add_related(std::string id, std::size_t src, std::size_t dst,
                               std::string relation_text, std::string paragraph_path) {
  if (src >= nodes_.size() || dst >= nodes_.size() ||
      nodes_[src].kind != NodeKind::kEntity || nodes_[dst].kind != NodeKind::kEntity) {
    throw ValidationError("RELATED_TO edge '" + id + "' must join two entity nodes");
  }
  if (src == dst) throw ValidationError("RELATED_TO edge '" + id + "' is a self-loop");
  if (paragraph_path.empty()) {
    throw ValidationError("RELATED_TO edge '" + id + "' needs a paragraph path");
  }
  return add_edge({std::move(id), EdgeLabel::kRelatedTo, src, dst,
                   std::move(relation_text), std::move(paragraph_path)});
}

std::size_t Graph::add_describes(std::string id, std::size_t entity, std::size_t paragraph,
                                 std::string relation_text) {
  if (entity >= nodes_.size() || paragraph >= nodes_.size() ||
      nodes_[entity].kind != NodeKind::kEntity ||
      nodes_[paragraph].kind != NodeKind::kParagraph) {
    throw ValidationError("DESCRIBES edge '" + id +
                          "' must go from an entity node to a paragraph node");
  }
  std::string path = nodes_[paragraph].value;
  return add_edge({std::move(id), EdgeLabel::kDescribes, entity, paragraph,
                   std::move(relation_text), std::move(path)});
}

std::optional<std::size_t> Graph::find_node(std::string_view id) const {
  const auto it = node_ids_.find(std::string(id));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Graph::find_entity(std::string_view entity_name) const {
  const auto it = entity_names_.find(std::string(entity_name));
  if (it == entity_names_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Graph::find_paragraph(std::string_view path) const {
  const auto it = paragraph_paths_.find(std::string(path));
  if (it == paragraph_paths_.end()) return std::nullopt;
  return it->second;
}

std::size_t Graph::node_index(std::string_view id) const {
  const auto idx = find_node(id);
  if (!idx) throw ValidationError("unknown node '" + std::string(id) + "'");
  return *idx;
}

DegreeCounts Graph::degree(std::size_t node) const {
  if (node >= nodes_.size()) throw ValidationError("node index out of range");
  DegreeCounts d;
  for (std::size_t e : incident_[node]) {
    if (edges_[e].label == EdgeLabel::kRelatedTo) {
      ++d.related;
    } else {
      ++d.describes;
    }
  }
  return d;
}

// --- construction -------------------------------------------------------------

Graph build_graph(const GraphInputs& in) {
  if (in.paragraphs == nullptr || in.vocab == nullptr) {
    throw ValidationError("build_graph needs paragraphs and a vocabulary");
  }
  static const std::vector<linker::EntityMention> kNoMentions;
  static const std::vector<extraction::RelationSpan> kNoRelations;
  static const std::vector<extraction::EntityDescription> kNoDescriptions;
  const auto& mentions = in.mentions ? *in.mentions : kNoMentions;
  const auto& relations = in.relations ? *in.relations : kNoRelations;
  const auto& descriptions = in.descriptions ? *in.descriptions : kNoDescriptions;

  std::unordered_set<std::string> known_paths;
  for (const corpus::Paragraph& p : *in.paragraphs) known_paths.insert(p.path);
  const auto check_path = [&](const std::string& path) {
    if (!known_paths.contains(path)) {
      throw ValidationError("dangling paragraph path '" + path + "'");
    }
  };

  Graph g;
  std::unordered_map<std::string, std::size_t> entity_node;
  const auto ensure_entity = [&](const std::string& entity_id) {
    if (const auto it = entity_node.find(entity_id); it != entity_node.end()) {
      return it->second;
    }
    const std::string* name = in.vocab->standard_name_for_id(entity_id);
    if (name == nullptr) throw ValidationError("unknown entity id '" + entity_id + "'");
    const std::size_t idx =
        g.add_entity("e" + std::to_string(entity_node.size() + 1), *name);
    entity_node.emplace(entity_id, idx);
    return idx;
  };

  std::unordered_set<std::string> hosting;
  for (const linker::EntityMention& m : mentions) {
    check_path(m.paragraph_path);
    ensure_entity(m.entity_id);
    hosting.insert(m.paragraph_path);
  }
  for (const extraction::RelationSpan& r : relations) {
    check_path(r.paragraph_path);
    ensure_entity(r.entity_a);
    ensure_entity(r.entity_b);
  }
  for (const extraction::EntityDescription& d : descriptions) {
    check_path(d.paragraph_path);
    ensure_entity(d.entity_id);
    hosting.insert(d.paragraph_path);
  }

  std::unordered_map<std::string, std::size_t> paragraph_node;
  for (const corpus::Paragraph& p : *in.paragraphs) {
    if (!hosting.contains(p.path) || paragraph_node.contains(p.path)) continue;
    paragraph_node.emplace(
        p.path, g.add_paragraph("p" + std::to_string(paragraph_node.size() + 1), p.path));
  }

  std::size_t r_seq = 0;
  for (const extraction::RelationSpan& r : relations) {
    g.add_related("r" + std::to_string(++r_seq), entity_node.at(r.entity_a),
                  entity_node.at(r.entity_b), r.relation_text, r.paragraph_path);
  }
  std::size_t d_seq = 0;
  for (const extraction::EntityDescription& d : descriptions) {
    g.add_describes("d" + std::to_string(++d_seq), entity_node.at(d.entity_id),
                    paragraph_node.at(d.paragraph_path), d.relation_text);
  }
  return g;
}

// --- persistence --------------------------------------------------------------

void persist(const Graph& graph, const std::filesystem::path& dir) {
  std::vector<Json> nodes{{{"schema", kNodesSchema}, {"version", kGraphSchemaVersion}}};
  for (const Node& n : graph.nodes()) {
    if (n.kind == NodeKind::kEntity) {
      nodes.push_back({{"id", n.id}, {"kind", "entity"}, {"entity_name", n.value}});
    } else {
      nodes.push_back({{"id", n.id}, {"kind", "paragraph"}, {"paragraph_path", n.value}});
    }
  }
  std::vector<Json> edges{{{"schema", kEdgesSchema}, {"version", kGraphSchemaVersion}}};
  for (const Edge& e : graph.edges()) {
    Json j{{"id", e.id},
           {"label", label_name(e.label)},
           {"src", graph.nodes()[e.src].id},
           {"dst", graph.nodes()[e.dst].id},
           {"relation_text", e.relation_text}};
    if (e.label == EdgeLabel::kRelatedTo) j["paragraph_path"] = e.paragraph_path;
    edges.push_back(std::move(j));
  }
  std::filesystem::create_directories(dir);
  io::write_jsonl(dir / "nodes.jsonl", nodes);
  io::write_jsonl(dir / "edges.jsonl", edges);
}

Graph load(const std::filesystem::path& dir) {
  Graph g;
  const auto nodes_path = dir / "nodes.jsonl";
  const auto edges_path = dir / "edges.jsonl";
  bool header = true;
  io::for_each_jsonl(nodes_path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = nodes_path.string() + ":" + std::to_string(line_no);
    if (header) {
      check_header(rec, kNodesSchema, where);
      header = false;
      return;
    }
    if (!rec.is_object()) throw ParseError(where + ": node record is not an object");
    const std::string id = str_field(rec, "id", where);
    const std::string kind = str_field(rec, "kind", where);
    try {
      if (kind == "entity") {
        g.add_entity(id, str_field(rec, "entity_name", where));
      } else if (kind == "paragraph") {
        g.add_paragraph(id, str_field(rec, "paragraph_path", where));
      } else {
        throw ParseError(where + ": unknown node kind '" + kind + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  });
  if (header) throw ParseError(nodes_path.string() + ": missing schema header");

  header = true;
  io::for_each_jsonl(edges_path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = edges_path.string() + ":" + std::to_string(line_no);
    if (header) {
      check_header(rec, kEdgesSchema, where);
      header = false;
      return;
    }
    if (!rec.is_object()) throw ParseError(where + ": edge record is not an object");
    const std::string id = str_field(rec, "id", where);
    const std::string label = str_field(rec, "label", where);
    const std::string src = str_field(rec, "src", where);
    const std::string dst = str_field(rec, "dst", where);
    const std::string text = str_field(rec, "relation_text", where);
    try {
      const std::size_t s = g.node_index(src);
      const std::size_t d = g.node_index(dst);
      if (label == "RELATED_TO") {
        g.add_related(id, s, d, text, str_field(rec, "paragraph_path", where));
      } else if (label == "DESCRIBES") {
        g.add_describes(id, s, d, text);
      } else {
        throw ParseError(where + ": unknown edge label '" + label + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  });
  if (header) throw ParseError(edges_path.string() + ": missing schema header");
  return g;
}

// --- analytics ----------------------------------------------------------------

std::vector<DegreeRow> top_degree(const Graph& graph, std::size_t k) {
  std::vector<DegreeRow> rows = entity_rows(graph);
  std::sort(rows.begin(), rows.end(), [](const DegreeRow& a, const DegreeRow& b) {
    if (a.degree.total() != b.degree.total()) return a.degree.total() > b.degree.total();
    return a.entity_name < b.entity_name;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

std::vector<DegreeRow> bottom_degree(const Graph& graph, std::size_t k) {
  std::vector<DegreeRow> rows = entity_rows(graph);
  std::sort(rows.begin(), rows.end(), [](const DegreeRow& a, const DegreeRow& b) {
    if (a.degree.total() != b.degree.total()) return a.degree.total() < b.degree.total();
    return a.entity_name < b.entity_name;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

std::vector<std::size_t> paths_up_to_2(const Graph& graph, std::size_t v1, std::size_t v2) {
  const auto& nodes = graph.nodes();
  if (v1 >= nodes.size() || v2 >= nodes.size()) {
    throw ValidationError("paths_up_to_2: unknown node");
  }
  if (nodes[v1].kind != NodeKind::kEntity || nodes[v2].kind != NodeKind::kEntity) {
    throw ValidationError("paths_up_to_2: endpoints must be entity nodes");
  }
  if (v1 == v2) throw ValidationError("paths_up_to_2: endpoints must differ");

  // Neighbor -> connecting RELATED_TO edges, for each endpoint.
  const auto neighborhood = [&](std::size_t v) {
    std::unordered_map<std::size_t, std::vector<std::size_t>> out;
    for (std::size_t e : graph.incident(v)) {
      const Edge& edge = graph.edges()[e];
      if (edge.label != EdgeLabel::kRelatedTo) continue;
      out[edge.src == v ? edge.dst : edge.src].push_back(e);
    }
    return out;
  };
  const auto n1 = neighborhood(v1);
  const auto n2 = neighborhood(v2);

  std::set<std::size_t> result;
  if (const auto it = n1.find(v2); it != n1.end()) {
    result.insert(it->second.begin(), it->second.end());
  }
  const auto& smaller = n1.size() <= n2.size() ? n1 : n2;
  const auto& larger = n1.size() <= n2.size() ? n2 : n1;
  for (const auto& [w, edges_a] : smaller) {
    if (w == v1 || w == v2) continue;
    const auto other = larger.find(w);
    if (other == larger.end()) continue;
    result.insert(edges_a.begin(), edges_a.end());
    result.insert(other->second.begin(), other->second.end());
  }
  return {result.begin(), result.end()};
}

}  // namespace kgrag::kg
