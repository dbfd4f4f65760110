// Copyright 2026 The popgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POPGAME_COMPOSITION_HPP_
#define POPGAME_COMPOSITION_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace popgame {

using Counts = std::vector<int>;

// Number of ways to write `total` as an ordered sum of `parts` nonnegative
// integers, i.e. C(total + parts - 1, parts - 1). Saturates at INT64_MAX.
std::int64_t CompositionCount(int total, int parts);

// Bijection between the compositions of `total` into `parts` nonnegative
// integers and 0..size()-1. The canonical order is lexicographic on the count
// vector: (0,..,0,total) has rank 0 and (total,0,..,0) the last rank.
//
// Both the deep-state space (counts of n players over |X| states) and the
// quantized simplex grid (multiples of 1/k) are indexed with this.
class CompositionIndex {
 public:
  CompositionIndex(int total, int parts);

  int total() const { return total_; }
  int parts() const { return parts_; }
  std::int64_t size() const { return size_; }

  std::int64_t Rank(std::span<const int> counts) const;
  Counts Unrank(std::int64_t rank) const;

  // All compositions in rank order. Throws kSupportCap past `cap` entries.
  std::vector<Counts> Enumerate(std::int64_t cap) const;

 private:
  // binom_[r][k] = C(r, k) for the ranges Rank() needs.
  std::int64_t Binom(int r, int k) const;

  int total_;
  int parts_;
  std::int64_t size_;
  std::vector<std::vector<std::int64_t>> binom_;
};

}  // namespace popgame

#endif  // POPGAME_COMPOSITION_HPP_
