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
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgrag/kg.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/retrieval.hpp"

// Question answering over the graph: pick edges around the question's
// entities, then rank their (relation text, paragraph text) pairs against
// the question embedding.
namespace kgrag::kg {

inline constexpr std::size_t kDefaultTopK = 5;

struct RetrievedText {
  std::string edge_id;  // empty for fallback results
  std::string relation_text;
  std::string paragraph_path;
  std::string paragraph_text;
  double score = 0.0;
};

struct SubgraphResult {
  std::vector<std::string> question_entities;  // names found in the graph
  std::pair<std::string, std::string> important;  // set when 3+ entities
  std::size_t candidate_count = 0;
  std::vector<RetrievedText> items;
  bool fallback = false;  // no question entity in the graph; baseline ranking
};

// Edge indices the ranking step considers for a set of question entity
// nodes (in question order). `important` holds the two picked nodes when
// there are three or more; ignored otherwise.
std::vector<std::size_t> collect_candidate_edges(const Graph& graph,
                                                 const std::vector<std::size_t>& entities,
                                                 std::pair<std::size_t, std::size_t> important = {});

// Asks the model for the two most important entities. Throws ParseError
// when the answer names an entity outside `names`, repeats one, or does
// not name exactly two.
std::pair<std::string, std::string> pick_important_entities(
    std::string_view question, const std::vector<std::string>& names,
    providers::ChatClient& chat, const prompts::PromptLibrary& prompts);

// Returns the standard names of the entities mentioned in a question.
using QuestionEntityFn = std::function<std::vector<std::string>(std::string_view)>;

class SubgraphRetriever {
 public:
  // `paragraph_texts` maps paragraph paths to text and must cover every
  // paragraph node and RELATED_TO source. `fallback_store`, when given,
  // serves the zero-entity fallback; otherwise the paragraphs are embedded
  // on demand.
  SubgraphRetriever(const Graph& graph, std::map<std::string, std::string> paragraph_texts,
                    QuestionEntityFn question_entities, providers::EmbedClient& embedder,
                    providers::ChatClient* chat, const prompts::PromptLibrary& prompts,
                    const retrieval::ContextStore* fallback_store = nullptr);

  // Items are distinct paragraphs, best-scoring pair first; ties by edge
  // order.
  SubgraphResult retrieve(std::string_view question, std::size_t k = kDefaultTopK);

 private:
  const std::string& text_of(const std::string& path) const;
  std::vector<RetrievedText> fallback(const Embedding& query, std::size_t k);

  const Graph& graph_;
  std::map<std::string, std::string> paragraph_texts_;
  QuestionEntityFn question_entities_;
  providers::EmbedClient& embedder_;
  providers::ChatClient* chat_;
  const prompts::PromptLibrary& prompts_;
  const retrieval::ContextStore* fallback_store_;
};

}  // namespace kgrag::kg
