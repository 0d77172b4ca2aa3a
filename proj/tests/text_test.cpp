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

#include <gtest/gtest.h>

#include <random>

#include "kgrag/text.hpp"
#include "oracles.hpp"

namespace kgrag::text {
namespace {

TEST(Utf8, RoundTripsMultibyte) {
  const std::string s = "Ammon\xE2\x80\x99s horn \xCE\xB1-synuclein";
  EXPECT_EQ(encode_utf8(decode_utf8(s)), s);
  EXPECT_EQ(decode_utf8("\xCE\xB1").size(), 1u);
}

TEST(Utf8, InvalidBytesBecomeReplacement) {
  const auto cps = decode_utf8("a\xFFz");
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], U'\xFFFD');
  EXPECT_EQ(decode_utf8("\xE2\x80").size(), 2u);  // truncated sequence
}

TEST(NormalizeToken, StripsEdgePunctuationOnly) {
  EXPECT_EQ(normalize_token("hippocampus."), "hippocampus");
  EXPECT_EQ(normalize_token("(5-HT1A)"), "5-ht1a");
  EXPECT_EQ(normalize_token("Ammon's"), "ammon's");
  EXPECT_EQ(normalize_token("..."), "");
  EXPECT_EQ(normalize_token("\xC3\x89tude"), "\xC3\xA9tude");
}

TEST(EditDistance, KnownValues) {
  EXPECT_EQ(edit_distance(U"kitten", U"sitting"), 3u);
  EXPECT_EQ(edit_distance(U"", U"abc"), 3u);
  EXPECT_EQ(edit_distance(U"abc", U"abc"), 0u);
  EXPECT_DOUBLE_EQ(normalized_similarity("", ""), 1.0);
  EXPECT_DOUBLE_EQ(normalized_similarity("abc", "xyz"), 0.0);
}

TEST(EditDistance, BandedAgreesWithFullTable) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = decode_utf8(testing::random_word(rng, 0, 9, "abc"));
    const auto b = decode_utf8(testing::random_word(rng, 0, 9, "abc"));
    const std::size_t bound = rng() % 6;
    const std::size_t d = testing::dp_edit_distance(a, b);
    const auto banded = edit_distance_within(a, b, bound);
    if (d <= bound) {
      ASSERT_TRUE(banded.has_value());
      EXPECT_EQ(*banded, d);
    } else {
      EXPECT_FALSE(banded.has_value());
    }
  }
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace kgrag::text
