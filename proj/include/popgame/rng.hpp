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

#ifndef POPGAME_RNG_HPP_
#define POPGAME_RNG_HPP_

#include <cstdint>
#include <span>

namespace popgame {

enum class DrawKind : std::uint64_t { kInit = 1, kAction = 2, kTransition = 3, kAux = 4 };

// Stateless uniforms: each draw is a hash of its full key, so any player's
// draws can be replayed or reassigned without touching other streams.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t Bits(std::uint64_t replication, std::uint64_t stream, std::uint64_t stage,
                     DrawKind kind) const {
    std::uint64_t h = Mix(seed_ ^ 0x9e3779b97f4a7c15ULL);
    h = Mix(h ^ replication);
    h = Mix(h ^ (stream * 0xd1b54a32d192ed03ULL));
    h = Mix(h ^ (stage * 0xaef17502108ef2d9ULL));
    return Mix(h ^ static_cast<std::uint64_t>(kind));
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform(std::uint64_t replication, std::uint64_t stream, std::uint64_t stage,
                 DrawKind kind) const {
    return static_cast<double>(Bits(replication, stream, stage, kind) >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t Mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
};

// Index drawn from a probability row by inversion; falls back to the last
// positive entry when rounding leaves u above the total.
inline int SampleIndex(std::span<const double> probs, double u) {
  double acc = 0.0;
  int last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace popgame

#endif  // POPGAME_RNG_HPP_
