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

#include "kgrag/subgraph.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "kgrag/corpus.hpp"
#include "kgrag/error.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/text.hpp"

namespace kgrag::kg {
namespace {

constexpr std::size_t kEmbedBatch = 256;

std::vector<Embedding> embed_batched(providers::EmbedClient& embedder,
                                     const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += kEmbedBatch) {
    const std::vector<std::string> chunk(
        texts.begin() + static_cast<std::ptrdiff_t>(i),
        texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + kEmbedBatch)));
    for (Embedding& e : embedder.embed(chunk)) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> collect_candidate_edges(const Graph& graph,
                                                 const std::vector<std::size_t>& entities,
                                                 std::pair<std::size_t, std::size_t> important) {
  std::vector<std::size_t> v;
  for (std::size_t e : entities) {
    if (std::find(v.begin(), v.end(), e) == v.end()) v.push_back(e);
  }
  if (v.empty()) return {};
  if (v.size() == 1) {
    std::vector<std::size_t> out;
    for (std::size_t e : graph.incident(v.front())) {
      const Edge& edge = graph.edges()[e];
      if (edge.label == EdgeLabel::kDescribes && edge.src == v.front()) out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  if (v.size() == 2) return paths_up_to_2(graph, v[0], v[1]);

  const auto [i1, i2] = important;
  const auto in_set = [&](std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  if (i1 == i2 || !in_set(i1) || !in_set(i2)) {
    throw ValidationError("important entities must be two distinct question entities");
  }
  std::set<std::size_t> out;
  for (std::size_t o : v) {
    if (o == i1 || o == i2) continue;
    for (std::size_t e : paths_up_to_2(graph, i1, o)) out.insert(e);
    for (std::size_t e : paths_up_to_2(graph, o, i2)) out.insert(e);
  }
  return {out.begin(), out.end()};
}

std::pair<std::string, std::string> pick_important_entities(
    std::string_view question, const std::vector<std::string>& names,
    providers::ChatClient& chat, const prompts::PromptLibrary& prompts) {
  if (names.size() < 3) throw ValidationError("picking important entities needs at least 3");
  std::string listing;
  std::unordered_map<std::string, std::string> by_key;
  for (const std::string& n : names) {
    listing += n;
    listing += '\n';
    by_key.emplace(corpus::normalize_surface(n), n);
  }
  const std::string raw = chat.chat(providers::user_prompt(prompts.render(
      prompts::kPickEntities, {{"question", std::string(question)}, {"entities", listing}})));

  std::vector<std::string> picked;
  std::vector<std::string> offenders;
  for (const std::string& item : extraction::parse_list(raw)) {
    const auto it = by_key.find(corpus::normalize_surface(item));
    if (it == by_key.end()) {
      offenders.push_back(item);
    } else {
      picked.push_back(it->second);
    }
  }
  if (!offenders.empty()) {
    std::string msg = "model named entities outside the question's set:";
    for (const std::string& o : offenders) msg += " '" + o + "'";
    throw ParseError(msg);
  }
  if (picked.size() == 2 && picked[0] == picked[1]) {
    throw ParseError("model picked the same entity twice: '" + picked[0] + "'");
  }
  if (picked.size() != 2) {
    throw ParseError("expected exactly two important entities, model gave " +
                     std::to_string(picked.size()));
  }
  return {picked[0], picked[1]};
}

SubgraphRetriever::SubgraphRetriever(const Graph& graph,
                                     std::map<std::string, std::string> paragraph_texts,
                                     QuestionEntityFn question_entities,
                                     providers::EmbedClient& embedder,
                                     providers::ChatClient* chat,
                                     const prompts::PromptLibrary& prompts,
                                     const retrieval::ContextStore* fallback_store)
    : graph_(graph),
      paragraph_texts_(std::move(paragraph_texts)),
      question_entities_(std::move(question_entities)),
      embedder_(embedder),
      chat_(chat),
      prompts_(prompts),
      fallback_store_(fallback_store) {}

const std::string& SubgraphRetriever::text_of(const std::string& path) const {
  const auto it = paragraph_texts_.find(path);
  if (it == paragraph_texts_.end()) {
    throw ValidationError("no text for paragraph '" + path + "'");
  }
  return it->second;
}

std::vector<RetrievedText> SubgraphRetriever::fallback(const Embedding& query, std::size_t k) {
  std::vector<RetrievedText> out;
  if (fallback_store_ != nullptr) {
    for (const auto& r : retrieval::baseline_topk(*fallback_store_, query, k)) {
      const auto& ctx = fallback_store_->contexts()[*fallback_store_->find(r.id)];
      out.push_back({"", "", r.id, ctx.text, r.score});
    }
    return out;
  }
  std::vector<std::string> paths;
  std::vector<std::string> texts;
  for (const auto& [path, text] : paragraph_texts_) {
    paths.push_back(path);
    texts.push_back(text);
  }
  if (texts.empty()) return out;
  const std::vector<Embedding> vecs = embed_batched(embedder_, texts);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out.push_back({"", "", paths[i], texts[i], dot(query, vecs[i])});
  }
  std::stable_sort(out.begin(), out.end(), [](const RetrievedText& a, const RetrievedText& b) {
    return a.score > b.score;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

SubgraphResult SubgraphRetriever::retrieve(std::string_view question, std::size_t k) {
  if (text::trim(question).empty()) throw ValidationError("question must be non-empty");
  if (k == 0) throw ValidationError("k must be at least 1");

  SubgraphResult result;
  std::vector<std::size_t> nodes;
  for (const std::string& name : question_entities_(question)) {
    const auto idx = graph_.find_entity(name);
    if (!idx || std::find(nodes.begin(), nodes.end(), *idx) != nodes.end()) continue;
    nodes.push_back(*idx);
    result.question_entities.push_back(name);
  }

  if (nodes.empty()) {
    const Embedding query = embedder_.embed({std::string(question)}).front();
    result.fallback = true;
    result.items = fallback(query, k);
    return result;
  }

  std::pair<std::size_t, std::size_t> important{};
  if (nodes.size() >= 3) {
    if (chat_ == nullptr) throw ConfigError("three or more question entities need a chat client");
    result.important =
        pick_important_entities(question, result.question_entities, *chat_, prompts_);
    important = {*graph_.find_entity(result.important.first),
                 *graph_.find_entity(result.important.second)};
  }
  const std::vector<std::size_t> edges = collect_candidate_edges(graph_, nodes, important);
  result.candidate_count = edges.size();
  if (edges.empty()) return result;

  // The question and every distinct text go out in one request sequence.
  std::vector<std::string> texts{std::string(question)};
  std::unordered_map<std::string, std::size_t> slot;
  const auto intern = [&](const std::string& t) {
    if (t.empty() || slot.contains(t)) return;
    slot.emplace(t, texts.size());
    texts.push_back(t);
  };
  for (std::size_t e : edges) {
    intern(graph_.edges()[e].relation_text);
    intern(text_of(graph_.edges()[e].paragraph_path));
  }
  const std::vector<Embedding> vecs = embed_batched(embedder_, texts);
  const Embedding& query = vecs.front();
  const auto score_of = [&](const std::string& t) {
    const auto it = slot.find(t);
    return it == slot.end() ? -1.0 : dot(query, vecs[it->second]);
  };

  std::vector<RetrievedText> ranked;
  ranked.reserve(edges.size());
  for (std::size_t e : edges) {
    const Edge& edge = graph_.edges()[e];
    const std::string& para = text_of(edge.paragraph_path);
    ranked.push_back({edge.id, edge.relation_text, edge.paragraph_path, para,
                      std::max(score_of(edge.relation_text), score_of(para))});
  }
  // `edges` is sorted, so stability keeps edge order among equal scores.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RetrievedText& a, const RetrievedText& b) { return a.score > b.score; });
  std::set<std::string> seen;
  for (RetrievedText& item : ranked) {
    if (result.items.size() == k) break;
    if (!seen.insert(item.paragraph_path).second) continue;
    result.items.push_back(std::move(item));
  }
  return result;
}

}  // namespace kgrag::kg
