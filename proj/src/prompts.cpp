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

#include "kgrag/prompts.hpp"

#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"

namespace kgrag::prompts {

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto& [name, body] : builtin_templates()) lib.set(name, body);
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  PromptLibrary lib = builtin();
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("prompt directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    lib.set(entry.path().stem().string(), io::read_file(entry.path()));
  }
  return lib;
}

bool PromptLibrary::has(std::string_view name) const {
  return templates_.find(name) != templates_.end();
}

const std::string& PromptLibrary::get(std::string_view name) const {
  const auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw ConfigError("no prompt template named '" + std::string(name) + "'");
  }
  return it->second;
}

void PromptLibrary::set(std::string name, std::string body) {
  templates_[std::move(name)] = std::move(body);
}

std::string PromptLibrary::render(
    std::string_view name, const std::map<std::string, std::string>& slots) const {
  const std::string& tmpl = get(name);
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string::npos) break;
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(tmpl, pos, open - pos);
    const std::string slot = tmpl.substr(open + 2, close - open - 2);
    const auto it = slots.find(slot);
    if (it == slots.end()) {
      throw ConfigError("prompt '" + std::string(name) + "' needs a value for {{" +
                        slot + "}}");
    }
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl, pos, std::string::npos);
  return out;
}

}  // namespace kgrag::prompts
