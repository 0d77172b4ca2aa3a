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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

// Prompt templates keyed by name. Templates contain `{{slot}}` markers
// filled at render time. The defaults are compiled in from
// assets/prompts; a directory of `<name>.txt` files overrides them.
namespace kgrag::prompts {

inline constexpr std::string_view kExtractEntities = "extract_entities";
inline constexpr std::string_view kFilterEntities = "filter_entities";
inline constexpr std::string_view kExtractRelations = "extract_relations";
inline constexpr std::string_view kExtractEntitySpans = "extract_entity_spans";
inline constexpr std::string_view kFilterDomain = "filter_domain";
inline constexpr std::string_view kPickEntities = "pick_entities";
inline constexpr std::string_view kGenerateQuestion = "generate_question";
inline constexpr std::string_view kJudge = "judge";
inline constexpr std::string_view kAnswerWithReferences = "answer_with_references";

const std::map<std::string, std::string>& builtin_templates();

class PromptLibrary {
 public:
  static PromptLibrary builtin();
  // Builtins overlaid with every *.txt file in `dir`.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  bool has(std::string_view name) const;
  const std::string& get(std::string_view name) const;

  // Throws ConfigError for an unknown template or a slot without a value.
  std::string render(std::string_view name,
                     const std::map<std::string, std::string>& slots) const;

  void set(std::string name, std::string body);

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace kgrag::prompts
