// Copyright 2026 The relerm Authors. All Rights Reserved.
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
#include <cstdint>
#include <span>
#include <vector>

#include "relerm/error.hpp"
#include "relerm/random.hpp"

namespace relerm {

// Walker/Vose alias table: O(n) construction, O(1) draws from a discrete
// distribution given by non-negative weights.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw NumericError("alias weights must be non-negative");
      total += w;
    }
    if (n == 0 || !(total > 0.0)) throw NumericError("alias weights sum to zero");
    probabilities_.resize(n);
    threshold_.resize(n);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      probabilities_[i] = weights[i] / total;
      scaled[i] = probabilities_[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      auto s = small.back();
      small.pop_back();
      auto l = large.back();
      threshold_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (auto i : large) threshold_[i] = 1.0, alias_[i] = i;
    for (auto i : small) threshold_[i] = 1.0, alias_[i] = i;
  }

  std::size_t size() const { return probabilities_.size(); }
  std::span<const double> probabilities() const { return probabilities_; }

  std::uint32_t sample(Rng& rng) const {
    auto column = static_cast<std::uint32_t>(rng.index(size()));
    return rng.uniform() < threshold_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> probabilities_;
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace relerm
