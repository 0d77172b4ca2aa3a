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

#include "kgrag/providers.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag::providers {
namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& base_url) {
    const std::size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw ConfigError("endpoint must be an absolute URL: " + base_url);
    }
    const std::size_t path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) {
      prefix_ = base_url.substr(path_start);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  Json post(const std::string& path, const Json& body, const Headers& headers,
            std::chrono::milliseconds timeout) override {
    httplib::Client cli(origin_);
    configure(cli, timeout);
    const auto res = cli.Post(prefix_ + path, to_headers(headers), body.dump(),
                              "application/json");
    return parse(check(res, path, false).value());
  }

  std::optional<Json> get(const std::string& path, const QueryParams& params,
                          const Headers& headers,
                          std::chrono::milliseconds timeout) override {
    httplib::Client cli(origin_);
    configure(cli, timeout);
    httplib::Params p(params.begin(), params.end());
    const auto res = cli.Get(prefix_ + path, p, to_headers(headers));
    const auto body = check(res, path, true);
    if (!body) return std::nullopt;
    return parse(*body);
  }

 private:
  static void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
  }

  static httplib::Headers to_headers(const Headers& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
  }

  std::optional<std::string> check(const httplib::Result& res,
                                   const std::string& path,
                                   bool not_found_is_empty) const {
    if (!res) {
      throw TransportError("request to " + origin_ + prefix_ + path +
                           " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 404 && not_found_is_empty) return std::nullopt;
    if (res->status < 200 || res->status >= 300) {
      const bool transient = res->status == 429 || res->status >= 500;
      throw TransportError("request to " + origin_ + prefix_ + path +
                               " returned HTTP " + std::to_string(res->status),
                           transient);
    }
    return res->body;
  }

  static Json parse(const std::string& body) {
    try {
      return Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw TransportError(std::string("response is not JSON: ") + e.what(),
                           false);
    }
  }

  std::string origin_;
  std::string prefix_;
};

std::vector<float> to_floats(const Json& arr) {
  if (!arr.is_array()) throw ParseError("embedding is not an array");
  std::vector<float> out;
  out.reserve(arr.size());
  for (const Json& x : arr) out.push_back(x.get<float>());
  return out;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "live") return Mode::kLive;
  if (name == "replay") return Mode::kReplay;
  if (name == "record") return Mode::kRecord;
  throw ConfigError("unknown provider mode '" + std::string(name) + "'");
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kLive:
      return "live";
    case Mode::kReplay:
      return "replay";
    case Mode::kRecord:
      return "record";
  }
  return "?";
}

ChatRequest user_prompt(std::string text, std::string system) {
  ChatRequest req;
  req.system = std::move(system);
  req.messages.push_back({"user", std::move(text)});
  return req;
}

std::unique_ptr<Transport> make_http_transport(const std::string& base_url) {
  return std::make_unique<HttpTransport>(base_url);
}

// --- FixtureStore -----------------------------------------------------------

FixtureStore::FixtureStore(const FixtureStore& other) {
  std::lock_guard lock(other.mu_);
  entries_ = other.entries_;
  index_ = other.index_;
}

FixtureStore& FixtureStore::operator=(const FixtureStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  entries_ = other.entries_;
  index_ = other.index_;
  return *this;
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  FixtureStore store;
  io::for_each_jsonl(path, [&](std::size_t line_no, const Json& rec) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!rec.is_object() || !rec.contains("hash") || !rec["hash"].is_string()) {
      throw ParseError(where + ": fixture entry needs a string 'hash'");
    }
    const std::string hash = rec["hash"].get<std::string>();
    if (rec.contains("response") && rec["response"].is_string()) {
      store.put_chat(hash, rec["response"].get<std::string>());
    } else if (rec.contains("vectors") && rec["vectors"].is_array()) {
      std::vector<std::vector<float>> vecs;
      try {
        for (const Json& v : rec["vectors"]) vecs.push_back(to_floats(v));
      } catch (const Json::exception& e) {
        throw ParseError(where + ": bad vector: " + e.what());
      }
      store.put_vectors(hash, std::move(vecs));
    } else {
      throw ParseError(where + ": fixture entry needs 'response' or 'vectors'");
    }
  });
  return store;
}

std::optional<std::string> FixtureStore::chat(const std::string& hash) const {
  std::lock_guard lock(mu_);
  const auto it = index_.find(hash);
  if (it == index_.end() || !entries_[it->second].response) return std::nullopt;
  return entries_[it->second].response;
}

std::optional<std::vector<std::vector<float>>> FixtureStore::vectors(
    const std::string& hash) const {
  std::lock_guard lock(mu_);
  const auto it = index_.find(hash);
  if (it == index_.end() || entries_[it->second].response) return std::nullopt;
  return entries_[it->second].vectors;
}

void FixtureStore::put_chat(const std::string& hash, std::string response) {
  std::lock_guard lock(mu_);
  if (index_.contains(hash)) return;
  index_.emplace(hash, entries_.size());
  entries_.push_back({hash, std::move(response), {}});
}

void FixtureStore::put_vectors(const std::string& hash,
                               std::vector<std::vector<float>> vectors) {
  std::lock_guard lock(mu_);
  if (index_.contains(hash)) return;
  index_.emplace(hash, entries_.size());
  entries_.push_back({hash, std::nullopt, std::move(vectors)});
}

std::size_t FixtureStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void FixtureStore::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::vector<Json> records;
  records.reserve(entries_.size());
  for (const Entry& e : entries_) {
    if (e.response) {
      records.push_back({{"hash", e.hash}, {"response", *e.response}});
    } else {
      records.push_back({{"hash", e.hash}, {"vectors", e.vectors}});
    }
  }
  io::write_jsonl(path, records);
}

// --- ProviderClient ---------------------------------------------------------

ProviderClient::ProviderClient(ProviderConfig cfg,
                               std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  if (cfg_.max_in_flight < 1 || cfg_.max_in_flight > 1024) {
    throw ConfigError("max_in_flight must be in [1, 1024]");
  }
  if (cfg_.retry_count < 0) throw ConfigError("retry count must be >= 0");
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(cfg_.max_in_flight);

  if (cfg_.mode == Mode::kReplay) {
    if (cfg_.fixture_path.empty()) {
      throw ConfigError("replay mode requires a fixture path");
    }
    if (!std::filesystem::exists(cfg_.fixture_path)) {
      throw ConfigError("fixture file not found: " + cfg_.fixture_path.string());
    }
    fixtures_ = FixtureStore::load(cfg_.fixture_path);
    return;
  }
  if (cfg_.mode == Mode::kRecord) {
    if (cfg_.fixture_path.empty()) {
      throw ConfigError("record mode requires a fixture path");
    }
    if (std::filesystem::exists(cfg_.fixture_path)) {
      fixtures_ = FixtureStore::load(cfg_.fixture_path);
    }
  }
  if (!cfg_.auth_env.empty()) {
    const char* key = std::getenv(cfg_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + cfg_.auth_env +
                        " is not set (required in " +
                        std::string(mode_name(cfg_.mode)) + " mode)");
    }
    headers_.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  if (!transport_) {
    if (cfg_.endpoint.empty()) {
      throw ConfigError("live provider needs an endpoint");
    }
    transport_ = make_http_transport(cfg_.endpoint);
  }
}

void ProviderClient::save_fixtures() const {
  if (cfg_.mode == Mode::kRecord) fixtures_.save(cfg_.fixture_path);
}

Json ProviderClient::post_with_retry(const std::string& path, const Json& body) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<1024>* s;
    ~Release() { s->release(); }
  } release{in_flight_.get()};
  for (int attempt = 0;; ++attempt) {
    try {
      ++live_calls_;
      return transport_->post(path, body, headers_, cfg_.timeout);
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= cfg_.retry_count) {
        throw TransportError(e.what() + std::string(" (after ") +
                                 std::to_string(attempt + 1) + " attempts)",
                             false);
      }
    }
    std::this_thread::sleep_for(cfg_.retry_backoff * (1 << std::min(attempt, 10)));
  }
}

std::optional<Json> ProviderClient::get_with_retry(const std::string& path,
                                                   const QueryParams& params) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<1024>* s;
    ~Release() { s->release(); }
  } release{in_flight_.get()};
  for (int attempt = 0;; ++attempt) {
    try {
      ++live_calls_;
      return transport_->get(path, params, headers_, cfg_.timeout);
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= cfg_.retry_count) {
        throw TransportError(e.what() + std::string(" (after ") +
                                 std::to_string(attempt + 1) + " attempts)",
                             false);
      }
    }
    std::this_thread::sleep_for(cfg_.retry_backoff * (1 << std::min(attempt, 10)));
  }
}

// --- ChatClient -------------------------------------------------------------

std::string ChatClient::request_hash(const ChatRequest& req) const {
  Json messages = Json::array();
  for (const ChatMessage& m : req.messages) messages.push_back({m.role, m.text});
  const Json canonical = {{"kind", "chat"},
                          {"model", cfg_.model_id},
                          {"system", req.system},
                          {"messages", messages}};
  return text::sha256_hex(canonical.dump());
}

std::string ChatClient::chat(const ChatRequest& req) {
  if (req.messages.empty()) throw ValidationError("chat request has no messages");
  if (req.temperature < 0.0) throw ValidationError("temperature must be >= 0");
  {
    std::lock_guard lock(log_mu_);
    log_.push_back(req);
  }
  const std::string hash = request_hash(req);
  if (cfg_.mode != Mode::kLive) {
    if (auto hit = fixtures_.chat(hash)) {
      ++fixture_hits_;
      return *std::move(hit);
    }
    if (cfg_.mode == Mode::kReplay) {
      throw FixtureMissing("no recorded chat response for request " + hash, hash);
    }
  }
  Json messages = Json::array();
  if (!req.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system}});
  }
  for (const ChatMessage& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.text}});
  }
  const Json body = {{"model", cfg_.model_id},
                     {"messages", messages},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens}};
  const Json res = post_with_retry("/chat/completions", body);
  std::string content;
  try {
    content = res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw TransportError(std::string("unexpected chat response shape: ") + e.what(),
                         false);
  }
  if (cfg_.mode == Mode::kRecord) fixtures_.put_chat(hash, content);
  return content;
}

std::vector<ChatRequest> ChatClient::request_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

// --- EmbedClient ------------------------------------------------------------

std::string EmbedClient::request_hash(const std::vector<std::string>& texts) const {
  const Json canonical = {{"kind", "embed"}, {"model", cfg_.model_id}, {"texts", texts}};
  return text::sha256_hex(canonical.dump());
}

std::vector<Embedding> EmbedClient::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed called with no texts");
  const std::string hash = request_hash(texts);
  std::vector<std::vector<float>> raw;
  bool have = false;
  if (cfg_.mode != Mode::kLive) {
    if (auto hit = fixtures_.vectors(hash)) {
      ++fixture_hits_;
      raw = *std::move(hit);
      have = true;
    } else if (cfg_.mode == Mode::kReplay) {
      throw FixtureMissing("no recorded embedding response for request " + hash,
                           hash);
    }
  }
  if (!have) {
    const Json res =
        post_with_retry("/embeddings", {{"model", cfg_.model_id}, {"input", texts}});
    try {
      std::vector<std::pair<std::size_t, std::vector<float>>> indexed;
      const Json& data = res.at("data");
      for (std::size_t i = 0; i < data.size(); ++i) {
        indexed.emplace_back(data[i].value("index", i),
                             to_floats(data[i].at("embedding")));
      }
      std::stable_sort(indexed.begin(), indexed.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [idx, v] : indexed) raw.push_back(std::move(v));
    } catch (const Json::exception& e) {
      throw TransportError(
          std::string("unexpected embedding response shape: ") + e.what(), false);
    }
    if (cfg_.mode == Mode::kRecord) fixtures_.put_vectors(hash, raw);
  }
  if (raw.size() != texts.size()) {
    throw ValidationError("embedding provider returned " + std::to_string(raw.size()) +
                          " vectors for " + std::to_string(texts.size()) + " texts");
  }
  std::vector<Embedding> out;
  out.reserve(raw.size());
  for (const auto& v : raw) out.push_back(Embedding::normalize(std::span<const float>(v)));
  return out;
}

// --- sessions ---------------------------------------------------------------

RecordSummary record_session(const std::filesystem::path& session,
                             ChatClient* chat, EmbedClient* embed) {
  RecordSummary summary;
  io::for_each_jsonl(session, [&](std::size_t line_no, const Json& rec) {
    const std::string where = session.string() + ":" + std::to_string(line_no);
    const std::string kind = rec.value("kind", std::string());
    try {
      if (kind == "chat") {
        if (chat == nullptr) throw ConfigError(where + ": no chat provider configured");
        ChatRequest req;
        req.system = rec.value("system", std::string());
        for (const Json& m : rec.at("messages")) {
          req.messages.push_back(
              {m.at("role").get<std::string>(), m.at("text").get<std::string>()});
        }
        req.temperature = rec.value("temperature", 0.0);
        req.max_tokens = rec.value("max_tokens", 1024);
        chat->chat(req);
        ++summary.chats;
      } else if (kind == "embed") {
        if (embed == nullptr) throw ConfigError(where + ": no embed provider configured");
        embed->embed(rec.at("texts").get<std::vector<std::string>>());
        ++summary.embeds;
      } else {
        throw ParseError(where + ": session entry kind must be 'chat' or 'embed'");
      }
    } catch (const Json::exception& e) {
      throw ParseError(where + ": bad session entry: " + e.what());
    }
  });
  if (chat != nullptr) chat->save_fixtures();
  if (embed != nullptr) embed->save_fixtures();
  return summary;
}

}  // namespace kgrag::providers
