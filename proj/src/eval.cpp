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

#include "kgrag/eval.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag::eval {
namespace {

// Index in [0, n) from the engine; avoids the library-specific behavior of
// std::uniform_int_distribution so runs match across toolchains.
std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

std::string render_set(const std::vector<std::string>& paragraphs) {
  std::string out;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] " + paragraphs[i];
  }
  return out;
}

}  // namespace

// --- synthetic questions ----------------------------------------------------

std::vector<std::size_t> degree_diverse_pool(const kg::Graph& graph, std::size_t pool_size,
                                             std::uint64_t seed) {
  struct Ranked {
    std::size_t node;
    std::size_t degree;
    const std::string* name;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    if (graph.nodes()[i].kind != kg::NodeKind::kEntity) continue;
    ranked.push_back({i, graph.degree(i).total(), &graph.nodes()[i].value});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.degree != b.degree) return a.degree < b.degree;
    return *a.name < *b.name;
  });
  std::vector<std::size_t> pool;
  if (ranked.size() <= pool_size) {
    for (const Ranked& r : ranked) pool.push_back(r.node);
    return pool;
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = ranked.size();
  for (std::size_t s = 0; s < pool_size; ++s) {
    const std::size_t lo = s * n / pool_size;
    const std::size_t hi = (s + 1) * n / pool_size;
    pool.push_back(ranked[lo + draw(rng, hi - lo)].node);
  }
  return pool;
}

bool is_disconnected_tuple(const kg::Graph& graph, const std::vector<std::size_t>& nodes) {
  for (std::size_t a : nodes) {
    for (std::size_t e : graph.incident(a)) {
      const kg::Edge& edge = graph.edges()[e];
      if (edge.label != kg::EdgeLabel::kRelatedTo) continue;
      const std::size_t other = edge.src == a ? edge.dst : edge.src;
      if (other != a && std::find(nodes.begin(), nodes.end(), other) != nodes.end()) {
        return false;
      }
    }
  }
  return true;
}

std::vector<SeedQuestion> gen_questions(const kg::Graph& graph, const GenOptions& options,
                                        providers::ChatClient& chat,
                                        const prompts::PromptLibrary& prompts) {
  if (options.n_entities < 2 || options.n_entities > 3) {
    throw ValidationError("questions are seeded by 2 or 3 entities");
  }
  if (options.pool_size < options.n_entities) {
    throw ValidationError("pool size must be at least the number of seed entities");
  }
  const std::vector<std::size_t> pool =
      degree_diverse_pool(graph, options.pool_size, options.seed);
  if (pool.size() < options.n_entities) {
    throw ValidationError("graph has " + std::to_string(pool.size()) +
                          " entities, fewer than the " + std::to_string(options.n_entities) +
                          " seeds a question needs");
  }

  std::mt19937_64 rng(options.seed ^ 0x9E3779B97F4A7C15ULL);
  std::set<std::vector<std::size_t>> used;
  std::vector<SeedQuestion> out;
  for (std::size_t q = 0; q < options.count; ++q) {
    std::vector<std::size_t> tuple;
    bool found = false;
    for (std::size_t attempt = 0; attempt < options.max_attempts && !found; ++attempt) {
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      tuple.clear();
      for (std::size_t i = 0; i < options.n_entities; ++i) {
        std::swap(idx[i], idx[i + draw(rng, idx.size() - i)]);
        tuple.push_back(pool[idx[i]]);
      }
      std::vector<std::size_t> key = tuple;
      std::sort(key.begin(), key.end());
      if (used.contains(key) || !is_disconnected_tuple(graph, tuple)) continue;
      used.insert(std::move(key));
      found = true;
    }
    if (!found) {
      throw Error("no unused disconnected " + std::to_string(options.n_entities) +
                  "-entity tuple found after " + std::to_string(options.max_attempts) +
                  " attempts (question " + std::to_string(q + 1) + ")");
    }

    SeedQuestion sq;
    std::string listing;
    for (std::size_t node : tuple) {
      sq.seeds.push_back(graph.nodes()[node].value);
      listing += graph.nodes()[node].value + "\n";
    }
    sq.question = text::trim(chat.chat(providers::user_prompt(
        prompts.render(prompts::kGenerateQuestion, {{"entities", listing}}))));
    if (sq.question.empty()) throw ParseError("model returned an empty question");
    out.push_back(std::move(sq));
  }
  return out;
}

// --- pairwise judging ------------------------------------------------------

std::string_view winner_name(Winner w) { return w == Winner::kA ? "A" : "B"; }
std::string_view position_name(Position p) { return p == Position::kFirst ? "first" : "second"; }

int parse_judge_choice(std::string_view raw) {
  std::string s = text::to_lower(text::trim(raw));
  std::size_t pos = 0;
  const auto skip = [&] {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '*' || s[pos] == '#' ||
                              s[pos] == ':' || s[pos] == '"' || s[pos] == '\'')) {
      ++pos;
    }
  };
  skip();
  if (s.compare(pos, 3, "set") == 0) pos += 3;
  skip();
  if (pos < s.size() && (s[pos] == '1' || s[pos] == '2')) {
    const bool ends = pos + 1 == s.size() ||
                      !(s[pos + 1] >= '0' && s[pos + 1] <= '9');
    if (ends) return s[pos] - '0';
  }
  throw ParseError("unparseable judge answer: '" + std::string(raw) + "'");
}

std::pair<JudgeVerdict, JudgeVerdict> judge_pair(std::string_view question_id,
                                                 std::string_view question,
                                                 std::vector<std::string> set_a,
                                                 std::vector<std::string> set_b,
                                                 providers::ChatClient& chat,
                                                 const prompts::PromptLibrary& prompts) {
  const std::size_t n = std::min(set_a.size(), set_b.size());
  set_a.resize(n);
  set_b.resize(n);
  const std::string a = render_set(set_a);
  const std::string b = render_set(set_b);
  const auto ask = [&](const std::string& first, const std::string& second) {
    return parse_judge_choice(chat.chat(providers::user_prompt(prompts.render(
        prompts::kJudge,
        {{"question", std::string(question)}, {"set_1", first}, {"set_2", second}}))));
  };
  const int first = ask(a, b);
  const int second = ask(b, a);
  const std::string id(question_id);
  return {{id, first == 1 ? Winner::kA : Winner::kB, Position::kFirst},
          {id, second == 2 ? Winner::kA : Winner::kB, Position::kSecond}};
}

Tally tally(const std::vector<JudgeVerdict>& verdicts) {
  struct Pair {
    const JudgeVerdict* first = nullptr;
    const JudgeVerdict* second = nullptr;
  };
  std::map<std::string, Pair> by_question;
  for (const JudgeVerdict& v : verdicts) {
    Pair& p = by_question[v.question_id];
    const JudgeVerdict*& slot = v.a_position == Position::kFirst ? p.first : p.second;
    if (slot != nullptr) {
      throw ValidationError("question '" + v.question_id + "' has two verdicts with A " +
                            std::string(position_name(v.a_position)));
    }
    slot = &v;
  }
  Tally t;
  for (const auto& [id, p] : by_question) {
    if (p.first == nullptr || p.second == nullptr) {
      throw ValidationError("unpaired verdict for question '" + id + "'");
    }
    const bool a_first = p.first->winner == Winner::kA;
    const bool a_second = p.second->winner == Winner::kA;
    ++t.questions;
    t.best_when_first += a_first ? 1 : 0;
    t.best_when_second += a_second ? 1 : 0;
    t.common += (a_first && a_second) ? 1 : 0;
  }
  return t;
}

// --- extraction metrics ----------------------------------------------------

Prf prf(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  if (predicted.empty() && gold.empty()) return {1.0, 1.0, 1.0};
  std::size_t tp = 0;
  for (const std::string& p : predicted) tp += gold.contains(p) ? 1 : 0;
  Prf r;
  r.precision = predicted.empty() ? 0.0
                                  : static_cast<double>(tp) / static_cast<double>(predicted.size());
  r.recall = gold.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(gold.size());
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

MacroPrf f1_metrics(const std::map<std::string, std::set<std::string>>& predicted,
                    const std::map<std::string, std::set<std::string>>& gold) {
  for (const auto& [doc, _] : predicted) {
    if (!gold.contains(doc)) {
      throw ValidationError("predictions for document '" + doc + "' which has no gold set");
    }
  }
  static const std::set<std::string> kEmpty;
  MacroPrf out;
  for (const auto& [doc, g] : gold) {
    const auto it = predicted.find(doc);
    const Prf p = prf(it == predicted.end() ? kEmpty : it->second, g);
    out.per_document.emplace(doc, p);
    out.mean.precision += p.precision;
    out.mean.recall += p.recall;
    out.mean.f1 += p.f1;
  }
  out.documents = gold.size();
  if (out.documents > 0) {
    const double n = static_cast<double>(out.documents);
    out.mean.precision /= n;
    out.mean.recall /= n;
    out.mean.f1 /= n;
  }
  return out;
}

Json to_json(const JudgeVerdict& v) {
  return {{"question_id", v.question_id},
          {"winner", winner_name(v.winner)},
          {"a_position", position_name(v.a_position)}};
}

Json to_json(const Tally& t) {
  return {{"questions", t.questions},
          {"best_when_first", t.best_when_first},
          {"best_when_first_pct", t.percent(t.best_when_first)},
          {"best_when_second", t.best_when_second},
          {"best_when_second_pct", t.percent(t.best_when_second)},
          {"common", t.common},
          {"common_pct", t.percent(t.common)}};
}

Json to_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace kgrag::eval
