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
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "popgame/error.hpp"
#include "popgame/game_model.hpp"
#include "../support/random_models.hpp"

using namespace popgame;

namespace {

bool HasIssue(const ValidationReport& r, const std::string& needle) {
  for (const auto& i : r.issues) {
    if (i.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::vector<double> Row(const GameSpec& s, int x, int u, std::vector<double> d) {
  std::vector<double> out(s.num_states());
  s.kernel.Row(1, x, u, d, out);
  return out;
}

}  // namespace

TEST_CASE("example 1 validates and has the printed matrices") {
  const auto s = BuildExample1();
  CHECK(Validate(s).ok());
  CHECK(s.n == 100);
  CHECK(s.horizon.kind == Horizon::Kind::kDiscounted);
  CHECK(s.horizon.beta == 0.9);
  const std::vector<double> d = {0.5, 0.5};
  // plain request
  CHECK(Row(s, 0, 0, d) == std::vector<double>{0.7, 0.3});
  CHECK(Row(s, 1, 0, d) == std::vector<double>{0.3, 0.7});
  // agree to decrease
  CHECK(Row(s, 0, 1, d) == std::vector<double>{0.8, 0.2});
  CHECK(Row(s, 1, 1, d) == std::vector<double>{0.4, 0.6});
  // agree to increase
  CHECK(Row(s, 0, 2, d) == std::vector<double>{0.6, 0.4});
  CHECK(Row(s, 1, 2, d) == std::vector<double>{0.3, 0.7});
}

TEST_CASE("example 1 cost thresholds on the others' request count") {
  const auto s = BuildExample1();
  auto cost = [&](int x, int others) {
    std::vector<double> d(2);
    d[1] = (others + x) / 100.0;
    d[0] = 1.0 - d[1];
    return s.cost.EvalState(1, x, 0, d);
  };
  CHECK(cost(0, 50) == 0.0);
  CHECK(cost(0, 20) == 5.0);
  CHECK(cost(0, 29) == 5.0);
  CHECK(cost(0, 30) == 0.0);
  CHECK(cost(0, 69) == 0.0);
  CHECK(cost(0, 70) == 1.0);
  // own request shifts both thresholds down by one
  CHECK(cost(1, 28) == 5.0);
  CHECK(cost(1, 29) == 0.0);
  CHECK(cost(1, 68) == 0.0);
  CHECK(cost(1, 69) == 1.0);
  CHECK(s.cost.coupling() == Coupling::kStateOnly);
}

TEST_CASE("validation reports a row that does not sum to one") {
  auto s = BuildExample1();
  s.kernel = TransitionKernel::Tabular(2, 3, 1,
                                       {0.5, 0.6, 0.8, 0.2, 0.6, 0.4,
                                        0.3, 0.7, 0.4, 0.6, 0.3, 0.7});
  const auto r = Validate(s);
  CHECK_FALSE(r.ok());
  CHECK(HasIssue(r, "row sum 1.1 ≠ 1"));
}

TEST_CASE("validation rejects a negative cost") {
  auto s = BuildExample1();
  s.cost = MakeConstantCost(2, 3, -1.0);
  const auto r = Validate(s);
  CHECK_FALSE(r.ok());
  CHECK(HasIssue(r, "cost must be nonnegative"));
}

TEST_CASE("validation catches d-dependent rows that leave the simplex at a vertex") {
  auto s = BuildExample1();
  std::vector<double> slope(2 * 3 * 2 * 2, 0.0);
  slope[0 * 2 + 1] = 0.5;  // x=0,u=0,y=0 grows with d(1)
  s.kernel = TransitionKernel::Tabular(2, 3, 1, s.kernel.probabilities(), slope);
  CHECK_FALSE(Validate(s).ok());
}

TEST_CASE("random affine models are normalized on the sampling grid") {
  for (int seed = 0; seed < 20; ++seed) {
    testing::RandomModelOptions o;
    o.num_states = 2 + seed % 2;
    o.num_actions = 2 + (seed / 2) % 2;
    o.time_varying = seed % 3 == 0;
    o.horizon = 3;
    o.cost_class = static_cast<Coupling>(seed % 3);
    CHECK(Validate(testing::RandomModel(seed, o)).ok());
  }
}

TEST_CASE("tabular kernels are affine in d") {
  testing::RandomModelOptions o;
  o.num_states = 3;
  const auto s = testing::RandomModel(5, o);
  const auto& p = s.kernel.probabilities();
  const auto& k = s.kernel.slope();
  const std::vector<double> d = {0.2, 0.5, 0.3};
  for (int x = 0; x < 3; ++x) {
    for (int u = 0; u < 2; ++u) {
      for (int y = 0; y < 3; ++y) {
        const std::size_t i = (x * 2 + u) * 3 + y;
        double want = p[i];
        for (int z = 0; z < 3; ++z) want += k[i * 3 + z] * d[z];
        CHECK(s.kernel.Eval(1, y, x, u, d) == doctest::Approx(want).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("separable costs equal own part plus the averaged part") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int nx = 3, nu = 2;
  auto own = [](int, int x, int u, std::span<const double> d) {
    return 1.0 + x * d[0] + u * d[2] * d[2];
  };
  auto avg = [](int, int x, int u, std::span<const double> d) {
    return (x + 1) * 0.5 + u * d[1];
  };
  const auto c = CostSpec::Separable(nx, nu, true, own, avg);
  CHECK(c.coupling() == Coupling::kSeparable);
  for (int trial = 0; trial < 50; ++trial) {
    auto joint = testing::RandomSimplexPoint(rng, nx * nu);
    std::vector<double> d(nx, 0.0);
    for (int x = 0; x < nx; ++x) d[x] = joint[x * nu] + joint[x * nu + 1];
    const int x = trial % nx, u = trial % nu;
    double want = own(1, x, u, d);
    for (int xp = 0; xp < nx; ++xp) {
      for (int up = 0; up < nu; ++up) want += joint[xp * nu + up] * avg(1, xp, up, d);
    }
    CHECK(std::abs(c.Eval(1, x, u, joint) - want) <= 1e-12);
  }
}

TEST_CASE("polynomial coupling class follows the terms present") {
  std::mt19937_64 rng(1);
  CHECK(testing::RandomPolynomialCost(rng, 2, 2, Coupling::kStateOnly).coupling() ==
        Coupling::kStateOnly);
  CHECK(testing::RandomPolynomialCost(rng, 2, 2, Coupling::kSeparable).coupling() ==
        Coupling::kSeparable);
  CHECK(testing::RandomPolynomialCost(rng, 2, 2, Coupling::kGeneral).coupling() ==
        Coupling::kGeneral);
}

TEST_CASE("stage weights") {
  const auto f = Horizon::Finite(5, 0.5);
  CHECK(f.StageWeight(1) == 1.0);
  CHECK(f.StageWeight(3) == 0.25);
  CHECK(Horizon::Finite(4).StageWeight(4) == 1.0);
}

TEST_CASE("save then load gives back the same spec") {
  const auto dir = std::filesystem::temp_directory_path() / "popgame_game_model_test";
  std::filesystem::create_directories(dir);
  for (const auto& spec : {BuildExample1(), BuildExample1Small(), BuildCoupledBinary(),
                           testing::RandomModel(3, {3, 3, 2, 2, 0.9, true, true,
                                                    Coupling::kGeneral})}) {
    const auto path = (dir / "spec.json").string();
    SaveGameSpec(spec, path);
    const auto back = LoadGameSpec(path);
    CHECK(SameSpec(spec, back));
    CHECK(Validate(back).ok());
    const std::vector<double> d(spec.num_states(), 1.0 / spec.num_states());
    for (int x = 0; x < spec.num_states(); ++x) {
      for (int u = 0; u < spec.num_actions(); ++u) {
        CHECK(back.kernel.Eval(1, 0, x, u, d) == spec.kernel.Eval(1, 0, x, u, d));
      }
    }
  }
}

TEST_CASE("malformed specs are rejected") {
  const Json good = GameSpecToJson(BuildExample1Small());

  SUBCASE("action count mismatch with the kernel") {
    Json j = good;
    j["actions"] = {"1", "2"};
    CHECK_THROWS_AS(GameSpecFromJson(j), Error);
  }
  SUBCASE("zero horizon") {
    Json j = good;
    j["horizon"] = 0;
    try {
      GameSpecFromJson(j);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("horizon must be ≥ 1") != std::string::npos);
    }
  }
  SUBCASE("unknown schema version") {
    Json j = good;
    j["schema_version"] = 99;
    CHECK_THROWS_AS(GameSpecFromJson(j), Error);
  }
  SUBCASE("missing field names its path") {
    Json j = good;
    j.erase("states");
    try {
      GameSpecFromJson(j);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(std::string(e.what()).find("states") != std::string::npos);
    }
  }
  SUBCASE("unknown builtin") {
    try {
      BuiltinModel("nope");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
    }
  }
}
