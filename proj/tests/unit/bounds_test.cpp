// Copyright 2026 The popgame Authors
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

#include <cmath>

#include "doctest.h"
#include "popgame/bounds.hpp"
#include "popgame/game_model.hpp"
#include "../support/random_models.hpp"

using namespace popgame;

namespace {

BoundConstants Flat(double kp, double kc, double km, double beta) {
  BoundConstants c;
  c.Kp = {kp};
  c.Kc = {kc};
  c.Km = {km};
  c.beta = beta;
  return c;
}

}  // namespace

TEST_CASE("kv/ko recursion") {
  SUBCASE("zero constants") {
    const auto k = KvKo(Flat(0, 0, 3, 0.9), 4);
    for (double v : k.Kv) CHECK(v == 0.0);
    for (double v : k.Ko) CHECK(v == 0.0);
  }
  SUBCASE("single stage") {
    const auto k = KvKo(Flat(0, 1, 0, 0.9), 1);
    CHECK(k.Kv == std::vector<double>{1.0});
    CHECK(k.Ko == std::vector<double>{0.0});
  }
  SUBCASE("three stages unrolled by hand") {
    // Kv_t = Kc + Km Kv_{t+1} + Kp sum_{tau=1}^{t+1} beta^(tau-1) Kc_tau, Kc_4 = 0
    const double b = 0.9;
    const double kv3 = 1.0 + 2.0 * 0.0 + 0.5 * (1.0 + b + b * b);
    const double kv2 = 1.0 + 2.0 * kv3 + 0.5 * (1.0 + b + b * b);
    const double kv1 = 1.0 + 2.0 * kv2 + 0.5 * (1.0 + b);
    const auto k = KvKo(Flat(0.5, 1, 2, b), 3);
    CHECK(k.Kv[2] == doctest::Approx(2.355).epsilon(1e-14));
    CHECK(k.Kv[1] == doctest::Approx(7.065).epsilon(1e-14));
    CHECK(k.Kv[0] == doctest::Approx(16.08).epsilon(1e-14));
    CHECK(std::abs(k.Kv[0] - kv1) < 1e-12);
    CHECK(std::abs(k.Kv[1] - kv2) < 1e-12);
    CHECK(k.Ko[2] == 0.0);
    CHECK(k.Ko[1] == doctest::Approx(2.355).epsilon(1e-14));
    CHECK(k.Ko[0] == doctest::Approx(9.42).epsilon(1e-14));
    // finite bound at n=100, gap=0.1
    const auto fb = FiniteBound(k, 100, 0.1);
    CHECK(fb.value == doctest::Approx(16.08 * 0.1 + 9.42 / 10.0).epsilon(1e-14));
    CHECK(fb.label.find("O-constant") != std::string::npos);
  }
  SUBCASE("homogeneous in Kc and Kp scaled together") {
    BoundConstants a;
    a.Kp = {0.3, 0.1, 0.4};
    a.Kc = {1.0, 2.0, 0.5};
    a.Km = {1.2, 0.7, 0.9};
    a.beta = 0.8;
    auto b = a;
    for (double& v : b.Kc) v *= 2.0;
    const auto ka = KvKo(a, 3);
    const auto kb = KvKo(b, 3);
    for (int t = 0; t < 3; ++t) {
      CHECK(std::abs(kb.Kv[t] - 2.0 * ka.Kv[t]) <= 1e-12);
      CHECK(std::abs(kb.Ko[t] - 2.0 * ka.Ko[t]) <= 1e-12);
    }
  }
}

TEST_CASE("finite bound limits") {
  const auto k = KvKo(Flat(0.5, 1, 2, 0.9), 3);
  CHECK(FiniteBound(KvKo(Flat(0, 0, 1, 0.9), 2), 50, 0.0).value == 0.0);
  CHECK(std::abs(FiniteBound(k, 1 << 30, 0.2).value - k.Kv[0] * 0.2) < 1e-3);
}

TEST_CASE("discounted bound") {
  CHECK(DiscountedBound(Flat(0.1, 0.0, 0.5, 0.9), 100).bound.value == 0.0);

  const auto refused = DiscountedBound(Flat(0.1, 1.0, 1.2, 0.9), 100);
  CHECK_FALSE(refused.ok);
  CHECK(refused.beta_km == doctest::Approx(1.08));
  CHECK(refused.message.find("1.08") != std::string::npos);

  // Kp=0, Kc=5, Km=1, beta=0.9, n=100:
  // (2 - beta)(1 - beta + Kp)/(1 - beta) * Kc/(1 - beta Km) / sqrt(n)
  const auto ex = DiscountedBound(Flat(0.0, 5.0, 1.0, 0.9), 100);
  CHECK(ex.ok);
  CHECK(ex.bound.value == doctest::Approx(1.1 * 0.1 / 0.1 * (5.0 / 0.1) / 10.0).epsilon(1e-12));
  CHECK(ex.bound.value == doctest::Approx(5.5).epsilon(1e-12));
}

TEST_CASE("estimated constants") {
  SUBCASE("decoupled kernel") {
    testing::RandomModelOptions o;
    o.coupled_kernel = false;
    const auto c = EstimateConstants(testing::RandomModel(1, o), 50, 3);
    CHECK(c.decoupled);
    CHECK(c.KpAt(1) == 0.0);
    CHECK(c.KmAt(1) == 1.0);
    CHECK(c.provenance == BoundConstants::Provenance::kEstimated);
  }
  SUBCASE("constant cost") {
    auto s = BuildExample1();
    s.cost = MakeConstantCost(2, 3, 4.0);
    CHECK(EstimateConstants(s, 50, 3).KcAt(1) == 0.0);
  }
  SUBCASE("planted affine slope") {
    auto s = BuildExample1Small();
    auto p = s.kernel.probabilities();
    std::vector<double> slope(p.size() * 2, 0.0);
    // x=0, u=0: T(1|.) = 0.5 + 0.1 d(1), T(0|.) = 0.5 - 0.1 d(1)
    p[0] = 0.5;
    p[1] = 0.5;
    slope[0 * 2 + 1] = -0.1;
    slope[1 * 2 + 1] = 0.1;
    s.kernel = TransitionKernel::Tabular(2, 3, 1, p, slope);
    const auto c = EstimateConstants(s, 200, 9);
    // difference quotients over small perturbations lose a few digits
    CHECK(c.KpAt(1) <= 0.1 + 1e-9);
    CHECK(c.KpAt(1) >= 0.1 - 1e-6);
  }
  SUBCASE("estimates never decrease with the budget") {
    testing::RandomModelOptions o;
    o.num_states = 3;
    o.cost_class = Coupling::kGeneral;
    const auto s = testing::RandomModel(4, o);
    double kp = 0, kc = 0, km = 0;
    for (int budget : {10, 40, 160, 640}) {
      const auto c = EstimateConstants(s, budget, 7);
      CHECK(c.KpAt(1) >= kp);
      CHECK(c.KcAt(1) >= kc);
      CHECK(c.KmAt(1) >= km);
      kp = c.KpAt(1);
      kc = c.KcAt(1);
      km = c.KmAt(1);
    }
  }
}

TEST_CASE("constants round-trip through json") {
  BoundConstants c;
  c.Kp = {0.3, 0.1};
  c.Kc = {1.0, 2.0};
  c.Km = {1.2, 0.7};
  c.beta = 0.8;
  const auto back = BoundConstantsFromJson(BoundConstantsToJson(c));
  CHECK(back.Kp == c.Kp);
  CHECK(back.Kc == c.Kc);
  CHECK(back.Km == c.Km);
  CHECK(back.beta == c.beta);
}
