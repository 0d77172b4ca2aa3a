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

#include "kgrag/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "kgrag/error.hpp"
#include "kgrag/jsonl.hpp"
#include "kgrag/text.hpp"

namespace kgrag::config {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::set<std::string> provider{"endpoint",    "model",       "auth_env",
                                              "timeout_ms",  "max_in_flight", "retry_count",
                                              "retry_backoff_ms", "fixtures", "mode"};
  static const std::map<std::string, std::set<std::string>> keys = [] {
    std::map<std::string, std::set<std::string>> m{
        {"run",
         {"corpus", "vocabulary", "output_dir", "prompts_dir", "mode", "k", "workers",
          "pool_size", "seed"}},
        {"chat", provider},
        {"embed", provider},
        {"biblio", provider},
        {"linker", {"simfn", "alpha", "max_n"}},
        {"extraction", {"theta", "use_llm", "use_filter"}},
        {"schedule", {"buckets", "entry_threshold"}},
    };
    m["biblio"].insert({"kind", "database"});
    return m;
  }();
  return keys;
}

std::string fmt_double(double v) {
  // Shortest representation that round-trips.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, RunConfig& cfg) : tree_(tree), cfg_(cfg) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return interpolate(text::trim(*v));
  }

  std::string str(const std::string& section, const std::string& key, const std::string& fallback,
                  bool report = true) {
    if (auto v = raw(section, key)) return *v;
    if (report) defaulted(section, key, fallback);
    return fallback;
  }

  double real(const std::string& section, const std::string& key, double fallback) {
    const auto v = raw(section, key);
    if (!v) {
      defaulted(section, key, fmt_double(fallback));
      return fallback;
    }
    return parse_real(*v, section + "." + key);
  }

  long long integer(const std::string& section, const std::string& key, long long fallback,
                    long long min) {
    const auto v = raw(section, key);
    if (!v) {
      defaulted(section, key, std::to_string(fallback));
      return fallback;
    }
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
      throw ConfigError(section + "." + key + ": expected an integer, got '" + *v + "'");
    }
    if (out < min) {
      throw ConfigError(section + "." + key + " must be >= " + std::to_string(min));
    }
    return out;
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    const auto v = raw(section, key);
    if (!v) {
      defaulted(section, key, fallback ? "true" : "false");
      return fallback;
    }
    const std::string s = text::to_lower(*v);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError(section + "." + key + ": expected a boolean, got '" + *v + "'");
  }

  std::filesystem::path path(const std::string& section, const std::string& key,
                             const std::filesystem::path& base) {
    const auto v = raw(section, key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base / p;
  }

  void defaulted(const std::string& section, const std::string& key, const std::string& value) {
    cfg_.defaults_used.push_back(section + "." + key + "=" + value);
  }

  static double parse_real(const std::string& v, const std::string& where) {
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
      throw ConfigError(where + ": expected a number, got '" + v + "'");
    }
    return out;
  }

 private:
  const pt::ptree& tree_;
  RunConfig& cfg_;
};

providers::ProviderConfig read_provider(Reader& r, const std::string& section,
                                        providers::Mode run_mode,
                                        const std::filesystem::path& base) {
  providers::ProviderConfig p;
  p.endpoint = r.str(section, "endpoint", "", false);
  p.model_id = r.str(section, "model", "", false);
  p.auth_env = r.str(section, "auth_env", "", false);
  p.timeout = std::chrono::milliseconds(r.integer(section, "timeout_ms", 60000, 1));
  p.max_in_flight = static_cast<int>(r.integer(section, "max_in_flight", 4, 1));
  p.retry_count = static_cast<int>(r.integer(section, "retry_count", 3, 0));
  p.retry_backoff = std::chrono::milliseconds(r.integer(section, "retry_backoff_ms", 500, 0));
  p.fixture_path = r.path(section, "fixtures", base);
  const auto mode = r.raw(section, "mode");
  try {
    p.mode = mode ? providers::parse_mode(*mode) : run_mode;
  } catch (const Error& e) {
    throw ConfigError(section + ".mode: " + e.what());
  }
  return p;
}

}  // namespace

std::string interpolate(const std::string& value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const std::size_t at = value.find("${", pos);
    if (at == std::string::npos) {
      out.append(value, pos, std::string::npos);
      break;
    }
    out.append(value, pos, at - pos);
    const std::size_t close = value.find('}', at + 2);
    if (close == std::string::npos) {
      throw ConfigError("unterminated ${...} reference in '" + value + "'");
    }
    const std::string name = value.substr(at + 2, close - at - 2);
    const char* env = std::getenv(name.c_str());
    if (name.empty() || env == nullptr) {
      throw ConfigError("environment variable '" + name + "' referenced by the config is not set");
    }
    out += env;
    pos = close + 1;
  }
  return out;
}

std::vector<retrieval::Bucket> parse_buckets(const std::string& text) {
  std::vector<retrieval::Bucket> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("schedule bucket '" + item + "' is not bound:weight");
    }
    out.push_back({Reader::parse_real(text::trim(item.substr(0, colon)), "schedule.buckets"),
                   Reader::parse_real(text::trim(item.substr(colon + 1)), "schedule.buckets")});
  }
  if (out.empty()) throw ConfigError("schedule.buckets is empty");
  return out;
}

std::string format_buckets(const std::vector<retrieval::Bucket>& buckets) {
  std::string out;
  for (const auto& b : buckets) {
    if (!out.empty()) out += ',';
    out += fmt_double(b.upper_bound) + ":" + fmt_double(b.weight);
  }
  return out;
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is not configured");
  if (!std::filesystem::exists(path)) {
    throw ConfigError(what + " not found: " + path.string());
  }
}

RunConfig load(const std::filesystem::path& path) {
  RunConfig cfg;
  cfg.source = path;
  std::string bytes;
  try {
    bytes = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  cfg.hash = text::sha256_hex(bytes);

  pt::ptree tree;
  try {
    std::istringstream in(bytes);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, _] : body) {
      if (!it->second.contains(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }

  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  Reader r(tree, cfg);
  cfg.corpus = r.path("run", "corpus", base);
  cfg.vocabulary = r.path("run", "vocabulary", base);
  const std::string out_dir = r.str("run", "output_dir", "out");
  cfg.output_dir = std::filesystem::path(out_dir).is_absolute() ? std::filesystem::path(out_dir)
                                                                : base / out_dir;
  cfg.prompts_dir = r.path("run", "prompts_dir", base);
  try {
    cfg.mode = providers::parse_mode(r.str("run", "mode", "replay"));
  } catch (const Error& e) {
    throw ConfigError(std::string("run.mode: ") + e.what());
  }
  cfg.k = static_cast<std::size_t>(r.integer("run", "k", 5, 1));
  cfg.workers = static_cast<std::size_t>(r.integer("run", "workers", 1, 1));
  cfg.pool_size = static_cast<std::size_t>(r.integer("run", "pool_size", 102, 2));
  cfg.seed = static_cast<std::uint64_t>(r.integer("run", "seed", 13, 0));

  cfg.chat = read_provider(r, "chat", cfg.mode, base);
  cfg.embed = read_provider(r, "embed", cfg.mode, base);
  cfg.biblio.kind = r.str("biblio", "kind", "fixture");
  if (cfg.biblio.kind != "fixture" && cfg.biblio.kind != "semantic_scholar") {
    throw ConfigError("biblio.kind must be 'fixture' or 'semantic_scholar'");
  }
  cfg.biblio.database = r.path("biblio", "database", base);
  cfg.biblio.provider = read_provider(r, "biblio", cfg.mode, base);

  try {
    const auto simfn = linker::parse_simfn(r.str("linker", "simfn", "fuzzy"));
    cfg.linker = linker::LinkerConfig::defaults(simfn);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("linker.simfn: ") + e.what());
  }
  cfg.linker.alpha = r.real("linker", "alpha", cfg.linker.alpha);
  cfg.linker.max_n = static_cast<std::size_t>(
      r.integer("linker", "max_n", static_cast<long long>(cfg.linker.max_n), 1));
  cfg.linker.validate();

  cfg.theta = r.real("extraction", "theta", 0.95);
  if (!(cfg.theta >= -1.0 && cfg.theta <= 1.0)) {
    throw ConfigError("extraction.theta must lie in [-1, 1]");
  }
  cfg.use_llm = r.boolean("extraction", "use_llm", true);
  cfg.use_filter = r.boolean("extraction", "use_filter", true);

  const auto table = retrieval::SpanWeightSchedule::table_one();
  const auto buckets_text = r.raw("schedule", "buckets");
  std::vector<retrieval::Bucket> buckets =
      buckets_text ? parse_buckets(*buckets_text) : table.buckets();
  if (!buckets_text) r.defaulted("schedule", "buckets", format_buckets(buckets));
  const double threshold =
      r.real("schedule", "entry_threshold", buckets.back().upper_bound);
  try {
    cfg.schedule = retrieval::SpanWeightSchedule(std::move(buckets), threshold);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return cfg;
}

}  // namespace kgrag::config
