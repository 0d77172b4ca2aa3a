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

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "kgrag/providers.hpp"

namespace kgrag::cli {

// Transports handed to the provider clients instead of HTTP ones; used by
// tests to record fixtures without a network.
struct Transports {
  std::shared_ptr<providers::Transport> chat;
  std::shared_ptr<providers::Transport> embed;
  std::shared_ptr<providers::Transport> biblio;
};

// Runs one command line (without the program name). Returns 0 on success,
// 1 on a domain error and 2 on a configuration or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Transports& transports = {});

}  // namespace kgrag::cli
