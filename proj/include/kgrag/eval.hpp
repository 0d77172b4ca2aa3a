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
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgrag/jsonl.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/providers.hpp"

namespace kgrag::eval {

// --- synthetic questions ----------------------------------------------------

struct GenOptions {
  std::size_t n_entities = 2;  // 2 or 3 seeds per question
  std::size_t count = 10;
  std::size_t pool_size = 102;
  std::uint64_t seed = 13;
  std::size_t max_attempts = 1000;  // per question
};

struct SeedQuestion {
  std::string question;
  std::vector<std::string> seeds;  // entity names
};

// Entity nodes spread across the degree distribution: entities ranked by
// (degree, name) are cut into `pool_size` equal strata and one is drawn
// from each. Every entity when the graph has at most `pool_size`.
std::vector<std::size_t> degree_diverse_pool(const kg::Graph& graph, std::size_t pool_size,
                                             std::uint64_t seed);

// True when no RELATED_TO edge joins any two of the nodes.
bool is_disconnected_tuple(const kg::Graph& graph, const std::vector<std::size_t>& nodes);

// Throws ValidationError when the pool is too small and Error when no
// unused disconnected tuple turns up within the attempt budget.
std::vector<SeedQuestion> gen_questions(const kg::Graph& graph, const GenOptions& options,
                                        providers::ChatClient& chat,
                                        const prompts::PromptLibrary& prompts);

// --- pairwise judging ------------------------------------------------------

enum class Winner { kA, kB };
enum class Position { kFirst, kSecond };

std::string_view winner_name(Winner w);
std::string_view position_name(Position p);

struct JudgeVerdict {
  std::string question_id;
  Winner winner = Winner::kA;
  Position a_position = Position::kFirst;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

// Parses the judge's answer ("1" or "2", optionally "Set 1"). Throws
// ParseError otherwise.
int parse_judge_choice(std::string_view raw);

// Two calls: A as set 1, then B as set 1. Both sets are cut to the shorter
// length first. The prompt carries only the paragraph texts.
std::pair<JudgeVerdict, JudgeVerdict> judge_pair(std::string_view question_id,
                                                 std::string_view question,
                                                 std::vector<std::string> set_a,
                                                 std::vector<std::string> set_b,
                                                 providers::ChatClient& chat,
                                                 const prompts::PromptLibrary& prompts);

struct Tally {
  std::size_t questions = 0;
  std::size_t best_when_first = 0;   // A won with A shown first
  std::size_t best_when_second = 0;  // A won with A shown second
  std::size_t common = 0;            // A won both
  double percent(std::size_t n) const {
    return questions == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(questions);
  }
};

// Throws ValidationError unless each question has exactly one verdict per
// position.
Tally tally(const std::vector<JudgeVerdict>& verdicts);

// --- extraction metrics ----------------------------------------------------

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Set comparison for one document. Both empty scores 1/1/1; either side
// empty scores 0 on precision (empty predictions) or recall (empty gold
// gives recall 1, precision 0).
Prf prf(const std::set<std::string>& predicted, const std::set<std::string>& gold);

struct MacroPrf {
  Prf mean;
  std::size_t documents = 0;
  std::map<std::string, Prf> per_document;
};

// Documents are the gold keys; a document without predictions counts as
// an empty prediction. Throws ValidationError for predictions on a
// document absent from gold.
MacroPrf f1_metrics(const std::map<std::string, std::set<std::string>>& predicted,
                    const std::map<std::string, std::set<std::string>>& gold);

Json to_json(const JudgeVerdict& v);
Json to_json(const Tally& t);
Json to_json(const Prf& p);

}  // namespace kgrag::eval
