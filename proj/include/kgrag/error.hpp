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

#include <stdexcept>
#include <string>

namespace kgrag {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing configuration, detected before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or model output.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input violates a domain invariant (duplicate ids, dangling paths, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Network failure or exhausted retries against a live provider.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, bool transient = true)
      : Error(what), transient_(transient) {}
  // Transient failures (connection errors, 429, 5xx) are retried.
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

// Replay mode has no recorded response for a request.
class FixtureMissing : public Error {
 public:
  FixtureMissing(const std::string& what, std::string hash)
      : Error(what), hash_(std::move(hash)) {}
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
};

}  // namespace kgrag
