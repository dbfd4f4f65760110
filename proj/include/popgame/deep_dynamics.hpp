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

#ifndef POPGAME_DEEP_DYNAMICS_HPP_
#define POPGAME_DEEP_DYNAMICS_HPP_

#include <atomic>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "popgame/composition.hpp"
#include "popgame/game_model.hpp"

namespace popgame {

inline constexpr std::int64_t kDefaultSupportCap = 5'000'000;

// Empirical distribution of all n players' states, kept as integer counts.
struct DeepState {
  Counts counts;

  int total() const;
  double operator()(int x) const { return static_cast<double>(counts[x]) / total(); }
  std::vector<double> Probabilities() const;
  friend bool operator==(const DeepState&, const DeepState&) = default;
};

// Empirical distribution of the n-1 players other than a given one.
struct OthersDeepState {
  Counts counts;

  int total() const;
  std::vector<double> Probabilities() const;
  friend bool operator==(const OthersDeepState&, const OthersDeepState&) = default;
};

// Joint state-action counts, row-major [x][u].
struct JointEmpirical {
  Counts counts;
  int num_actions = 0;
  friend bool operator==(const JointEmpirical&, const JointEmpirical&) = default;
};

// Finite law over count vectors sharing one total.
struct CountDistribution {
  int total = 0;
  std::vector<Counts> support;
  std::vector<double> probs;

  double Mass() const;
  // Probability of an exact count vector (0 when absent).
  double ProbabilityOf(const Counts& counts) const;
};

using MeanField = std::vector<double>;

// Removes the deviator at state x. Throws kInconsistentState when d has no
// player at x.
OthersDeepState OthersFromFull(const DeepState& d, int x);

// (n-1)/n * others + 1/n * delta(x): the full distribution the kernel sees.
std::vector<double> Blend(const OthersDeepState& others, int x);

// PMF over {0..total} of trials Bernoulli(p) successes.
std::vector<double> BinomialPmf(int trials, double p);

// Law of the number of other players at state y next stage, given the
// deviator's state and the others' common local law: the convolution over
// source states of Binomial(count(x), T(y | x, law(x), blend)).
std::vector<double> MarginalNextCountPmf(const TransitionKernel& kernel, int t, int y,
                                         int deviator_x, const OthersDeepState& others,
                                         const LocalLaw& law);

// Exact joint law of the others' next counts as a dense vector indexed by
// CompositionIndex(n-1, |X|) rank. Each source group moves as an independent
// multinomial; the joint law is their convolution.
std::vector<double> JointNextDeepPmfDense(const TransitionKernel& kernel, int t,
                                          int deviator_x, const OthersDeepState& others,
                                          const LocalLaw& law,
                                          std::int64_t support_cap = kDefaultSupportCap);

CountDistribution JointNextDeepPmf(const TransitionKernel& kernel, int t, int deviator_x,
                                   const OthersDeepState& others, const LocalLaw& law,
                                   std::int64_t support_cap = kDefaultSupportCap);

// Exact law of the others' joint state-action counts. Support entries are
// flattened [x][u] counts.
CountDistribution JointActionPmf(const OthersDeepState& others, const LocalLaw& law,
                                 std::int64_t support_cap = kDefaultSupportCap);

// Expected stage cost of a player at x (counted in d) who mixes with
// `own_row` while everybody else follows `others_law`.
double ExpectedStageCost(const GameSpec& spec, int t, int x, const DeepState& d,
                         std::span<const double> own_row, const LocalLaw& others_law,
                         std::int64_t support_cap = kDefaultSupportCap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

// Sampled version of ExpectedStageCost for joint-action supports past the cap.
MonteCarloEstimate ExpectedStageCostMonteCarlo(const GameSpec& spec, int t, int x,
                                               const DeepState& d,
                                               std::span<const double> own_row,
                                               const LocalLaw& others_law,
                                               std::int64_t samples, std::uint64_t seed);

// m'(y) = sum_x m(x) T(y | x, law(x), m).
MeanField MeanFieldStep(const TransitionKernel& kernel, int t, const MeanField& m,
                        const LocalLaw& law);

// Infinite-population stage cost with M(x',u') = m(x') others_law(x')(u').
double InfiniteStageCost(const CostSpec& cost, int t, int x, const MeanField& m,
                         std::span<const double> own_row, const LocalLaw& others_law);

// Shared cache of joint next-count PMFs keyed by (stage key, deviator state,
// others' counts, law rounded to 1e-12). Safe for concurrent use.
class PmfCache {
 public:
  using Value = std::shared_ptr<const std::vector<double>>;

  // Entries stop being stored once `budget_doubles` values are held.
  explicit PmfCache(std::size_t budget_doubles = std::size_t{1} << 23)
      : budget_(budget_doubles) {}

  Value GetOrCompute(const TransitionKernel& kernel, int t, int deviator_x,
                     const OthersDeepState& others, const LocalLaw& law,
                     std::int64_t support_cap = kDefaultSupportCap);

  std::size_t size() const;
  std::int64_t hits() const;
  void Clear();

 private:
  struct Key {
    int stage_key;
    int deviator_x;
    Counts others;
    std::vector<std::int64_t> law;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  mutable std::shared_mutex mu_;
  std::unordered_map<Key, Value, KeyHash> map_;
  std::atomic<std::int64_t> hits_{0};
  std::size_t budget_;
  std::size_t stored_ = 0;
};

}  // namespace popgame

#endif  // POPGAME_DEEP_DYNAMICS_HPP_
