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

#include <atomic>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/providers.hpp"
#include "kgrag/references.hpp"

namespace kgrag::testing {

// Deterministic character-trigram embedding: similar strings get similar
// vectors, identical strings identical ones.
std::vector<float> trigram_vector(std::string_view text, std::size_t dim = 64);

// A stand-in for the chat, embedding and bibliographic services. Chat
// prompts are recognized by their template and answered by simple rules
// over the prompt text; `override_chat` takes precedence when it returns
// a value.
class FakeModel : public providers::Transport {
 public:
  explicit FakeModel(std::vector<std::string> lexicon = {}, std::size_t dim = 64);

  Json post(const std::string& path, const Json& body, const providers::Headers& headers,
            std::chrono::milliseconds timeout) override;
  std::optional<Json> get(const std::string& path, const providers::QueryParams& params,
                          const providers::Headers& headers,
                          std::chrono::milliseconds timeout) override;

  // Prompt text of every chat request, in arrival order.
  std::vector<std::string> prompts() const;
  std::size_t posts() const { return posts_.load(); }
  std::size_t gets() const { return gets_.load(); }

  std::function<std::optional<std::string>(const std::string& prompt)> override_chat;
  // Served by get(): DOI lookups and title matches.
  std::vector<eval::PaperRecord> papers;
  // Requests for these DOIs fail with a non-transient TransportError.
  std::vector<std::string> failing_dois;

  std::string answer(const std::string& prompt) const;

 private:
  std::vector<std::string> lexicon_;
  std::size_t dim_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
  std::atomic<std::size_t> posts_{0};
  std::atomic<std::size_t> gets_{0};
};

// Answers chat requests from a fixed script, in order, and remembers every
// prompt. Embedding requests are answered with trigram vectors.
class ScriptedTransport : public providers::Transport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies = {});
  Json post(const std::string& path, const Json& body, const providers::Headers& headers,
            std::chrono::milliseconds timeout) override;
  std::optional<Json> get(const std::string& path, const providers::QueryParams& params,
                          const providers::Headers& headers,
                          std::chrono::milliseconds timeout) override;
  void push(std::string reply);
  // Raw embedding vectors keyed by exact text; others use trigram_vector.
  std::map<std::string, std::vector<float>> vectors;
  std::vector<Json> bodies() const;
  std::size_t remaining() const;
  // Fails the next `n` posts with a transient TransportError.
  std::size_t fail_next = 0;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> replies_;
  std::vector<Json> bodies_;
};

providers::ProviderConfig live_config(std::string model = "test-model");

// Owns a fresh directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

// Source-tree data directory (tests/data).
std::filesystem::path data_dir();

}  // namespace kgrag::testing
