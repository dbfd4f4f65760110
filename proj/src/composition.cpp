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

#include "popgame/composition.hpp"

#include <limits>
#include <string>

#include "popgame/error.hpp"

namespace popgame {
namespace {

constexpr std::int64_t kSaturated = std::numeric_limits<std::int64_t>::max();

std::int64_t SaturatingBinom(int r, int k) {
  if (k < 0 || k > r) return 0;
  if (k > r - k) k = r - k;
  // Multiplicative form; the running value is always an exact binomial.
  __int128 value = 1;
  for (int i = 1; i <= k; ++i) {
    value = value * (r - k + i) / i;
    if (value > kSaturated) return kSaturated;
  }
  return static_cast<std::int64_t>(value);
}

}  // namespace

std::int64_t CompositionCount(int total, int parts) {
  if (parts <= 0 || total < 0) return 0;
  return SaturatingBinom(total + parts - 1, parts - 1);
}

CompositionIndex::CompositionIndex(int total, int parts)
    : total_(total), parts_(parts), size_(CompositionCount(total, parts)) {
  if (parts <= 0 || total < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "composition index needs parts >= 1 and total >= 0");
  }
  const int rows = total + parts;
  binom_.assign(rows + 1, std::vector<std::int64_t>(parts + 1, 0));
  for (int r = 0; r <= rows; ++r) {
    for (int k = 0; k <= parts && k <= r; ++k) binom_[r][k] = SaturatingBinom(r, k);
  }
}

std::int64_t CompositionIndex::Binom(int r, int k) const {
  if (r < 0 || k < 0 || k > r) return 0;
  return binom_[r][k];
}

std::int64_t CompositionIndex::Rank(std::span<const int> counts) const {
  std::int64_t rank = 0;
  int remaining = total_;
  for (int i = 0; i + 1 < parts_; ++i) {
    const int c = counts[i];
    const int p = parts_ - i;
    // Compositions of the tail whose coordinate i is smaller than c.
    rank += Binom(remaining + p - 1, p - 1) - Binom(remaining - c + p - 1, p - 1);
    remaining -= c;
  }
  return rank;
}

Counts CompositionIndex::Unrank(std::int64_t rank) const {
  Counts counts(parts_, 0);
  int remaining = total_;
  for (int i = 0; i + 1 < parts_; ++i) {
    const int p = parts_ - i;
    int c = 0;
    while (true) {
      const std::int64_t block = Binom(remaining - c + p - 2, p - 2);
      if (rank < block) break;
      rank -= block;
      ++c;
    }
    counts[i] = c;
    remaining -= c;
  }
  counts[parts_ - 1] = remaining;
  return counts;
}

std::vector<Counts> CompositionIndex::Enumerate(std::int64_t cap) const {
  if (size_ > cap) {
    throw Error(ErrorCode::kSupportCap,
                "enumeration of " + std::to_string(size_) +
                    " compositions exceeds cap " + std::to_string(cap) +
                    "; reduce n or |X|");
  }
  std::vector<Counts> out;
  out.reserve(static_cast<std::size_t>(size_));
  for (std::int64_t r = 0; r < size_; ++r) out.push_back(Unrank(r));
  return out;
}

}  // namespace popgame
