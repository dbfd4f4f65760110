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

#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "popgame/dss_solver.hpp"
#include "popgame/error.hpp"
#include "popgame/mean_field_solver.hpp"
#include "popgame/population_simulator.hpp"
#include "../support/random_models.hpp"

using namespace popgame;

namespace {

GameSpec Small(std::uint64_t seed, int n, int T) {
  testing::RandomModelOptions o;
  o.n = n;
  o.horizon = T;
  o.cost_class = Coupling::kGeneral;
  return testing::RandomModel(seed, o);
}

}  // namespace

TEST_CASE("population state bookkeeping") {
  const auto p = PopulationState::FromStates({0, 2, 2, 1, 2}, 3);
  CHECK(p.counts == Counts{1, 1, 3});
  CHECK(p.Consistent());
  auto q = p;
  q.states[0] = 2;
  CHECK_FALSE(q.Consistent());
}

TEST_CASE("deterministic system has a single zero-variance path") {
  GameSpec s;
  s.states.labels = {"a", "b"};
  s.actions.labels = {"u", "v"};
  s.n = 4;
  s.horizon = Horizon::Finite(3);
  // a -> b, b -> a whatever the action
  s.kernel = TransitionKernel::Tabular(2, 2, 1, {0, 1, 0, 1, 1, 0, 1, 0});
  s.cost = CostSpec::StateOnly(2, 2, true, [](int, int x, int, std::span<const double> d) {
    return 1.0 + x + d[0];
  });
  s.initial_dist = {1.0, 0.0};
  const auto sol = SolveFinite(s);
  DssPolicy policy(sol.strategy);
  SimulationOptions o;
  o.stages = 3;
  o.replications = 50;
  o.store_paths = true;
  const auto r = Simulate(s, policy, o);
  CHECK(r.standard_error == 0.0);
  for (const auto& path : r.paths) {
    CHECK(path == std::vector<Counts>{{4, 0}, {0, 4}, {4, 0}, {0, 4}});
  }
  // stage costs 2, 2, 2
  CHECK(r.mean_cost == 6.0);
}

TEST_CASE("same seed gives the same result; thread count does not matter") {
  const auto s = Small(3, 5, 3);
  const auto sol = SolveFinite(s);
  DssPolicy policy(sol.strategy);
  SimulationOptions o;
  o.stages = 3;
  o.replications = 3000;
  o.seed = 99;
  o.store_paths = true;
  o.execution = Execution::kSerial;
  const auto a = Simulate(s, policy, o);
  const auto b = Simulate(s, policy, o);
  o.execution = Execution::kParallel;
  const auto c = Simulate(s, policy, o);
  for (const auto* other : {&b, &c}) {
    CHECK(a.mean_cost == other->mean_cost);
    CHECK(a.standard_error == other->standard_error);
    CHECK(a.replication_cost == other->replication_cost);
    CHECK(a.paths == other->paths);
    CHECK(a.player_costs == other->player_costs);
    CHECK(a.player_mean_cost == other->player_mean_cost);
  }
  o.seed = 100;
  CHECK(Simulate(s, policy, o).replication_cost != a.replication_cost);
}

TEST_CASE("monte carlo mean matches the exact value") {
  const auto s = Small(5, 3, 3);
  const auto sol = SolveFinite(s);
  DssPolicy policy(sol.strategy);
  SimulationOptions o;
  o.stages = 3;
  o.replications = 1000000;
  o.seed = 1;
  const auto r = Simulate(s, policy, o);
  const DeepStateSpace space(3, 2);
  const double exact = ExpectedInitialValue(s, space, sol.values.slices[0]);
  CHECK(std::abs(r.mean_cost - exact) <= 4.0 * r.standard_error);
}

TEST_CASE("simulating past the strategy names the missing node") {
  const auto s = Small(6, 3, 2);
  const auto sol = SolveFinite(s);
  DssPolicy policy(sol.strategy);
  SimulationOptions o;
  o.stages = 3;
  o.replications = 2;
  try {
    Simulate(s, policy, o);
    FAIL("expected a strategy gap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStrategyGap);
    CHECK(std::string(e.what()).find("stage 3") != std::string::npos);
  }
}

TEST_CASE("permutation check") {
  const auto s = BuildExample1Small();
  const auto sol = SolveFinite(s);
  DssPolicy policy(sol.strategy);
  CHECK(PermutationCheck(s, policy, 10, 20, 4, true).pass);
  const auto out = PermutationCheck(s, policy, 10, 20, 4);
  CHECK(out.pass);
  for (int i = 0; i < s.n; ++i) CHECK(out.permutation[i] != i);
  // player 0 pinned to each action in turn; at least one differs from the
  // shared law on the visited nodes
  bool caught = false;
  for (int u = 0; u < 3; ++u) {
    PlantedPolicy planted(policy, 0, u);
    caught = caught || !PermutationCheck(s, planted, 10, 20, 4).pass;
  }
  CHECK(caught);
}

TEST_CASE("chi-square goodness of fit") {
  const auto exact = ChiSquareTest({250, 250, 500}, {0.25, 0.25, 0.5}, 0.001);
  CHECK(exact.statistic == 0.0);
  CHECK(exact.p_value == doctest::Approx(1.0));
  CHECK(exact.pass);
  // one degree of freedom, statistic 4: p = 0.0455
  const auto g = ChiSquareTest({60, 40}, {0.5, 0.5}, 0.001);
  CHECK(g.statistic == doctest::Approx(4.0));
  CHECK(g.degrees_of_freedom == 1);
  CHECK(g.p_value == doctest::Approx(0.0455).epsilon(1e-3));
  CHECK_FALSE(ChiSquareTest({900, 100}, {0.5, 0.5}, 0.001).pass);
  // thin bins are pooled
  const auto pooled = ChiSquareTest({500, 497, 2, 1}, {0.5, 0.497, 0.002, 0.001}, 0.001);
  CHECK(pooled.bins == 2);
}

TEST_CASE("one-step histogram agrees with the exact kernel") {
  testing::RandomModelOptions o;
  o.n = 6;
  o.num_states = 3;
  const auto s = testing::RandomModel(12, o);
  std::mt19937_64 rng(12);
  const auto law = testing::RandomLaw(rng, 3, 2);
  const auto g = OneStepHistogramTest(s, 1, 1, DeepState{{2, 3, 1}}, law, 20000, 3, 0.001);
  CHECK(g.pass);
  CHECK(g.bins > 3);
}

TEST_CASE("decoupled model: no-sharing strategy loses nothing") {
  testing::RandomModelOptions o;
  o.horizon = 3;
  o.coupled_kernel = false;
  const auto base = testing::RandomModel(13, o);
  PolynomialCost poly;
  poly.base = {0.2, 0.7, 0.9, 0.1};
  const auto cost = MakePolynomialCost(2, 2, poly);
  ConvergenceOptions c;
  c.replications = 20000;
  c.seed = 2;
  c.grid_resolution = 20;
  const auto table = ConvergenceExperiment(
      [&](int n) {
        auto s = base;
        s.n = n;
        s.cost = cost;
        return s;
      },
      {4, 8}, c);
  for (const auto& row : table.rows) CHECK(row.gap <= 4.0 * row.ns_standard_error + 1e-12);
}

TEST_CASE("trembling-hand experiment with no shock changes nothing") {
  auto s = BuildCoupledBinary();
  s.n = 6;
  const auto sol = SolveSmfeFinite(s, BuildGrid(2, 30));
  SimulationOptions o;
  o.stages = 5;
  o.replications = 500;
  o.seed = 8;
  const auto out = TremblingHandExperiment(s, sol, 3, sol.ns.trajectory[2], o);
  CHECK(out.delta == 0.0);
  CHECK(out.delta_standard_error == 0.0);
}

TEST_CASE("band containment counts stages from the given one on") {
  SimulationResult r;
  r.stages = 3;
  r.paths = {{{5, 5}, {2, 8}, {5, 5}, {9, 1}}};
  // stages 2..3 hold counts 8 and 5 at state 1
  CHECK(BandContainment(r, 1, 3, 7, 2) == 0.5);
  CHECK(BandContainment(r, 1, 0, 10, 1) == 1.0);
}
