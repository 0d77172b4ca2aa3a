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
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "kgrag/embedding.hpp"
#include "kgrag/jsonl.hpp"

// Clients for the generative-model, embedding and bibliographic services.
// Every client runs in one of three modes:
//   live   - calls the service through a Transport;
//   replay - answers only from a fixture file, never touching the network;
//   record - answers from the fixture when possible, otherwise calls live
//            and stores the response for later replay.
namespace kgrag::providers {

enum class Mode { kLive, kReplay, kRecord };

Mode parse_mode(std::string_view name);
std::string_view mode_name(Mode mode);

struct ProviderConfig {
  std::string endpoint;
  std::string model_id;
  std::string auth_env;  // name of the environment variable holding the key
  std::chrono::milliseconds timeout{60000};
  int max_in_flight = 4;
  int retry_count = 3;
  std::chrono::milliseconds retry_backoff{500};
  std::filesystem::path fixture_path;
  Mode mode = Mode::kReplay;
};

struct ChatMessage {
  std::string role;
  std::string text;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string system;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

// Builds a single-turn request.
ChatRequest user_prompt(std::string text, std::string system = {});

using Headers = std::vector<std::pair<std::string, std::string>>;
using QueryParams = std::vector<std::pair<std::string, std::string>>;

// HTTP seam. Implementations throw TransportError; its `transient` flag
// decides whether the client retries.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Json post(const std::string& path, const Json& body,
                    const Headers& headers, std::chrono::milliseconds timeout) = 0;
  // Returns std::nullopt for 404.
  virtual std::optional<Json> get(const std::string& path,
                                  const QueryParams& params,
                                  const Headers& headers,
                                  std::chrono::milliseconds timeout) = 0;
};

// Transport over cpp-httplib. `base_url` is scheme://host[:port][/prefix];
// request paths are appended to the prefix.
std::unique_ptr<Transport> make_http_transport(const std::string& base_url);

// Response cache keyed by request hash, persisted as JSONL:
//   {"hash": "...", "response": "..."}        chat
//   {"hash": "...", "vectors": [[...], ...]}  embed
class FixtureStore {
 public:
  static FixtureStore load(const std::filesystem::path& path);

  std::optional<std::string> chat(const std::string& hash) const;
  std::optional<std::vector<std::vector<float>>> vectors(
      const std::string& hash) const;
  void put_chat(const std::string& hash, std::string response);
  void put_vectors(const std::string& hash,
                   std::vector<std::vector<float>> vectors);

  std::size_t size() const;
  // Writes entries in insertion order.
  void save(const std::filesystem::path& path) const;

  FixtureStore() = default;
  FixtureStore(const FixtureStore& other);
  FixtureStore& operator=(const FixtureStore& other);

 private:
  struct Entry {
    std::string hash;
    std::optional<std::string> response;
    std::vector<std::vector<float>> vectors;
  };
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Mode handling, throttling, retries and call accounting shared by the
// concrete clients.
class ProviderClient {
 public:
  // Live and record modes resolve the auth variable here, so a missing key
  // is a ConfigError before any request is made. A null transport in
  // live/record mode creates an HTTP transport for cfg.endpoint.
  explicit ProviderClient(ProviderConfig cfg,
                          std::shared_ptr<Transport> transport = nullptr);
  virtual ~ProviderClient() = default;

  const ProviderConfig& config() const { return cfg_; }
  // Requests that went to the transport (fixture hits excluded).
  std::size_t live_calls() const { return live_calls_.load(); }
  std::size_t fixture_hits() const { return fixture_hits_.load(); }
  const FixtureStore& fixtures() const { return fixtures_; }
  // Persists the fixture file (record mode); no-op in other modes.
  void save_fixtures() const;

 protected:
  Json post_with_retry(const std::string& path, const Json& body);
  std::optional<Json> get_with_retry(const std::string& path,
                                     const QueryParams& params);

  ProviderConfig cfg_;
  std::shared_ptr<Transport> transport_;
  FixtureStore fixtures_;
  Headers headers_;
  std::atomic<std::size_t> live_calls_{0};
  std::atomic<std::size_t> fixture_hits_{0};
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

class ChatClient : public ProviderClient {
 public:
  using ProviderClient::ProviderClient;

  std::string chat(const ChatRequest& req);
  std::string request_hash(const ChatRequest& req) const;

  // Every request passed to chat(), in call order.
  std::vector<ChatRequest> request_log() const;

 private:
  mutable std::mutex log_mu_;
  std::vector<ChatRequest> log_;
};

class EmbedClient : public ProviderClient {
 public:
  using ProviderClient::ProviderClient;

  // One unit-norm vector per text, in order. Throws ValidationError for
  // an empty batch.
  std::vector<Embedding> embed(const std::vector<std::string>& texts);
  std::string request_hash(const std::vector<std::string>& texts) const;
};

struct RecordSummary {
  std::size_t chats = 0;
  std::size_t embeds = 0;
};

// Plays a session file through the clients (which should be in record
// mode) and saves their fixtures. Each line is
//   {"kind": "chat", "system": "...", "messages": [{"role","text"}], ...}
// or {"kind": "embed", "texts": ["..."]}.
RecordSummary record_session(const std::filesystem::path& session,
                             ChatClient* chat, EmbedClient* embed);

}  // namespace kgrag::providers
