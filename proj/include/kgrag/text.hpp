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
#include <optional>
#include <string>
#include <string_view>

// Text primitives shared by tokenization, vocabulary normalization and
// string similarity. All offsets are byte offsets into UTF-8 text; all
// lengths used by similarity functions are counted in code points.
namespace kgrag::text {

// Invalid byte sequences decode to U+FFFD, one byte at a time.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Decodes one code point starting at s[pos]; returns it and advances pos.
char32_t next_code_point(std::string_view s, std::size_t& pos);

bool is_space(char32_t c);
bool is_punct(char32_t c);
char32_t to_lower(char32_t c);

std::string to_lower(std::string_view s);

// Lowercases and strips leading/trailing punctuation. Internal
// punctuation ("5-ht1a", "ammon's") is kept. May return "".
std::string normalize_token(std::string_view token);

std::string trim(std::string_view s);

// Levenshtein distance over code points (unit costs).
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// Banded variant: returns the distance if it is <= max_distance,
// std::nullopt otherwise. Never reports a distance larger than the bound.
std::optional<std::size_t> edit_distance_within(std::u32string_view a,
                                                std::u32string_view b,
                                                std::size_t max_distance);

// 1 - edit_distance / max(|a|, |b|), with similarity("", "") = 1.
double normalized_similarity(std::u32string_view a, std::u32string_view b);
double normalized_similarity(std::string_view a, std::string_view b);

std::string sha256_hex(std::string_view data);

}  // namespace kgrag::text
