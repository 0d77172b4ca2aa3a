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
#include <span>
#include <vector>

namespace kgrag {

// A unit-norm embedding vector. Construction normalizes (or verifies), so
// every cosine downstream is a plain dot product.
class Embedding {
 public:
  Embedding() = default;

  // Scales `raw` to unit L2 norm. Throws ValidationError for a zero or
  // non-finite vector.
  static Embedding normalize(std::span<const double> raw);
  static Embedding normalize(std::span<const float> raw);

  // Accepts values already of unit norm (within 1e-6), e.g. loaded from a
  // store; throws ValidationError otherwise.
  static Embedding from_unit(std::vector<float> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  bool empty() const { return values_.empty(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<float> values) : values_(std::move(values)) {}
  std::vector<float> values_;
};

// Dot product accumulated in double, in index order. Throws
// ValidationError on dimension mismatch.
double dot(const Embedding& a, const Embedding& b);
double dot(std::span<const float> a, std::span<const float> b);

}  // namespace kgrag
