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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgrag/linker.hpp"
#include "kgrag/providers.hpp"
#include "kgrag/retrieval.hpp"

// The run configuration: one INI file naming inputs, provider settings
// and algorithm parameters. Values may reference environment variables as
// ${NAME}; relative paths resolve against the file's directory.
namespace kgrag::config {

struct BiblioConfig {
  std::string kind = "fixture";  // fixture | semantic_scholar
  std::filesystem::path database;  // fixture kind
  providers::ProviderConfig provider;
};

struct RunConfig {
  std::filesystem::path source;
  std::string hash;  // SHA-256 of the file bytes

  std::filesystem::path corpus;
  std::filesystem::path vocabulary;
  std::filesystem::path output_dir;
  std::filesystem::path prompts_dir;
  providers::Mode mode = providers::Mode::kReplay;
  std::size_t k = 5;
  std::size_t workers = 1;

  providers::ProviderConfig chat;
  providers::ProviderConfig embed;
  BiblioConfig biblio;

  linker::LinkerConfig linker;
  double theta = 0.95;
  bool use_llm = true;
  bool use_filter = true;

  retrieval::SpanWeightSchedule schedule = retrieval::SpanWeightSchedule::table_one();

  std::size_t pool_size = 102;
  std::uint64_t seed = 13;

  // "section.key=value" for every parameter left at its default.
  std::vector<std::string> defaults_used;
};

// Throws ConfigError for unreadable files, unknown sections or keys,
// malformed values and unset environment variables.
RunConfig load(const std::filesystem::path& path);

// "0.01:0.10,0.02:0.15" -> buckets. Throws ConfigError.
std::vector<retrieval::Bucket> parse_buckets(const std::string& text);
std::string format_buckets(const std::vector<retrieval::Bucket>& buckets);

// Replaces ${NAME} with the environment value. Throws ConfigError for an
// unset variable or an unterminated reference.
std::string interpolate(const std::string& value);

// Throws ConfigError naming the missing file.
void require_file(const std::filesystem::path& path, const std::string& what);

}  // namespace kgrag::config
