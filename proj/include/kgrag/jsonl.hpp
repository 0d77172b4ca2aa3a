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
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgrag {

using Json = nlohmann::json;

namespace io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Calls fn(line_number, record) for every non-blank line; line numbers are
// 1-based. A line that is not valid JSON raises ParseError naming the file
// and line. Exceptions thrown by fn propagate unchanged.
void for_each_jsonl(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const Json&)>& fn);

// Compact single-line serialization used by every JSONL writer, so byte
// output depends only on the data.
std::string to_line(const Json& record);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& records);

}  // namespace io
}  // namespace kgrag
