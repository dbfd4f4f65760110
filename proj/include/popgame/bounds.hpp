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

#ifndef POPGAME_BOUNDS_HPP_
#define POPGAME_BOUNDS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "popgame/game_model.hpp"

namespace popgame {

// Lipschitz constants of the model. Per-stage vectors hold one entry per
// stage, or a single entry used at every stage.
struct BoundConstants {
  enum class Provenance { kUserSupplied, kEstimated };

  std::vector<double> Kp;  // kernel vs distribution
  std::vector<double> Kc;  // cost vs joint distribution
  std::vector<double> Km;  // mean-field step vs m
  double beta = 1.0;
  Provenance provenance = Provenance::kUserSupplied;
  bool decoupled = false;
  // Absolute bound on the stage cost; kept apart from the Lipschitz Kc.
  double cost_bound = 0.0;
  std::int64_t samples = 0;

  double KpAt(int t) const;
  double KcAt(int t) const;
  double KmAt(int t) const;
};

// Sample-based lower estimates of the constants: maxima of infinity-norm
// difference quotients over seeded pairs of distributions. Pair i depends
// only on (seed, i), so estimates never decrease as the budget grows. A
// distribution-independent kernel gets Kp = 0 and Km = 1 exactly.
BoundConstants EstimateConstants(const GameSpec& spec, int sample_budget, std::uint64_t seed);

struct KvKoResult {
  std::vector<double> Kv;  // Kv[t-1], t = 1..T
  std::vector<double> Ko;
};

// Kv_t = Kc_t + Kv_{t+1} Km_t + Kp_t sum_{tau=1}^{t+1} beta^{tau-1} Kc_tau,
// Ko_t = Kv_{t+1} + Ko_{t+1}, with Kv_{T+1} = Ko_{T+1} = 0 and Kc_{T+1} = 0.
KvKoResult KvKo(const BoundConstants& constants, int horizon);

struct BoundValue {
  double value = 0.0;    // bracket times 1/sqrt(n) term, as returned
  double bracket = 0.0;  // raw constant in front of the O(1/sqrt(n)) term
  std::string label;
};

// Kv_1 gap + Ko_1 / sqrt(n), up to the unspecified O-constant.
BoundValue FiniteBound(const KvKoResult& k, int n, double gap);

struct DiscountedBoundResult {
  bool ok = false;
  BoundValue bound;
  double beta_km = 0.0;
  bool decoupled_shortcut = false;
  std::string message;
};

// (2 - beta)(1 - beta + Kp)/(1 - beta) * Kc/(1 - beta Km) / sqrt(n). Refuses
// when beta Km >= 1 unless the model is decoupled, in which case Kp = 0 and
// Km = 1 are used.
DiscountedBoundResult DiscountedBound(const BoundConstants& constants, int n);

Json BoundConstantsToJson(const BoundConstants& c);
BoundConstants BoundConstantsFromJson(const Json& j);
Json KvKoToJson(const KvKoResult& k);
Json BoundValueToJson(const BoundValue& b);
Json DiscountedBoundToJson(const DiscountedBoundResult& r);

}  // namespace popgame

#endif  // POPGAME_BOUNDS_HPP_
