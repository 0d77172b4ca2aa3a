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

#include "kgrag/embedding.hpp"

#include <cmath>
#include <string>

#include "kgrag/error.hpp"

namespace kgrag {
namespace {

template <typename T>
Embedding normalize_impl(std::span<const T> raw, auto make) {
  double sq = 0.0;
  for (T x : raw) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("cannot normalize a zero or non-finite vector");
  }
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
  }
  return make(std::move(out));
}

}  // namespace

Embedding Embedding::normalize(std::span<const double> raw) {
  return normalize_impl(raw, [](std::vector<float> v) { return Embedding(std::move(v)); });
}

Embedding Embedding::normalize(std::span<const float> raw) {
  return normalize_impl(raw, [](std::vector<float> v) { return Embedding(std::move(v)); });
}

Embedding Embedding::from_unit(std::vector<float> values) {
  double sq = 0.0;
  for (float x : values) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw ValidationError("embedding is not unit-norm (norm " +
                          std::to_string(norm) + ")");
  }
  return Embedding(std::move(values));
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ValidationError("embedding dimension mismatch: " +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double dot(const Embedding& a, const Embedding& b) {
  return dot(a.values(), b.values());
}

}  // namespace kgrag
