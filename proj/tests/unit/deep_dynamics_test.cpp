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
#include <numeric>
#include <random>
#include <string>

#include "doctest.h"
#include "popgame/deep_dynamics.hpp"
#include "popgame/error.hpp"
#include "../support/brute_force.hpp"
#include "../support/random_models.hpp"

using namespace popgame;

namespace {

OthersDeepState Others(Counts c) { return OthersDeepState{std::move(c)}; }

double Sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Each state moves to `target` with probability one, whatever the action.
TransitionKernel Deterministic(int nx, int nu, int target) {
  std::vector<double> p(static_cast<std::size_t>(nx) * nu * nx, 0.0);
  for (int xu = 0; xu < nx * nu; ++xu) p[xu * nx + target] = 1.0;
  return TransitionKernel::Tabular(nx, nu, 1, p);
}

TransitionKernel Identity(int nx, int nu) {
  std::vector<double> p(static_cast<std::size_t>(nx) * nu * nx, 0.0);
  for (int x = 0; x < nx; ++x) {
    for (int u = 0; u < nu; ++u) p[(x * nu + u) * nx + x] = 1.0;
  }
  return TransitionKernel::Tabular(nx, nu, 1, p);
}

LocalLaw Uniform(int nx, int nu) {
  return LocalLaw::FromRows(std::vector<std::vector<double>>(nx, std::vector<double>(nu, 1.0 / nu)));
}

}  // namespace

TEST_CASE("removing the deviator from the deep state") {
  CHECK(OthersFromFull(DeepState{{2, 1}}, 0).counts == Counts{1, 1});
  CHECK(OthersFromFull(DeepState{{0, 2}}, 1).counts == Counts{0, 1});
  try {
    OthersFromFull(DeepState{{0, 2}}, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInconsistentState);
    CHECK(std::string(e.what()).find("deviator state inconsistent with deep state") !=
          std::string::npos);
  }
}

TEST_CASE("blend puts the deviator back with weight 1/n") {
  CHECK(Blend(Others({1, 0}), 1) == std::vector<double>{0.5, 0.5});
  const auto b = Blend(Others({9, 0}), 1);
  CHECK(b[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(0.1).epsilon(1e-15));
  const auto c = Blend(Others({0, 4, 0}), 1);
  CHECK(Sum(c) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c[1] == 1.0);
}

TEST_CASE("marginal next-count law") {
  SUBCASE("deterministic kernel gives a point mass") {
    const auto pmf = MarginalNextCountPmf(Deterministic(2, 2, 1), 1, 1, 0, Others({2, 0}),
                                          Uniform(2, 2));
    CHECK(pmf == std::vector<double>{0.0, 0.0, 1.0});
  }
  SUBCASE("one other player is a single Bernoulli") {
    const auto k = TransitionKernel::Tabular(2, 1, 1, {0.3, 0.7, 0.3, 0.7});
    const auto pmf = MarginalNextCountPmf(k, 1, 1, 0, Others({1, 0}), Uniform(2, 1));
    REQUIRE(pmf.size() == 2);
    CHECK(pmf[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(pmf[1] == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("n=4 matches exhaustive enumeration of the three other players") {
    for (int seed = 0; seed < 10; ++seed) {
      testing::RandomModelOptions o;
      o.n = 4;
      const auto s = testing::RandomModel(100 + seed, o);
      std::mt19937_64 rng(seed);
      const auto law = testing::RandomLaw(rng, 2, 2);
      const auto d = testing::RandomDeepState(rng, 4, 2);
      const int x = d.counts[0] > 0 ? 0 : 1;
      const auto others = OthersFromFull(d, x);
      const auto brute = testing::BruteNextOthers(s.kernel, 1, x, others.counts, law);
      for (int y = 0; y < 2; ++y) {
        std::vector<double> want(4, 0.0);
        for (const auto& [c, p] : brute) want[c[y]] += p;
        const auto got = MarginalNextCountPmf(s.kernel, 1, y, x, others, law);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
      }
    }
  }
}

TEST_CASE("binomial pmf") {
  const auto b = BinomialPmf(3, 0.5);
  const std::vector<double> want{0.125, 0.375, 0.375, 0.125};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(b[k] - want[k]) <= 1e-15);
  CHECK(BinomialPmf(4, 0.0) == std::vector<double>{1, 0, 0, 0, 0});
  CHECK(BinomialPmf(4, 1.0) == std::vector<double>{0, 0, 0, 0, 1});
}

TEST_CASE("joint next deep-state law") {
  SUBCASE("single state is a point mass at n-1") {
    const auto k = TransitionKernel::Tabular(1, 2, 1, {1.0, 1.0});
    const auto pmf = JointNextDeepPmf(k, 1, 0, Others({4}), Uniform(1, 2));
    REQUIRE(pmf.support.size() == 1);
    CHECK(pmf.support[0] == Counts{4});
    CHECK(pmf.probs[0] == 1.0);
  }
  SUBCASE("n=2 is the other player's row on unit vectors") {
    testing::RandomModelOptions o;
    o.n = 2;
    o.num_states = 3;
    const auto s = testing::RandomModel(8, o);
    std::mt19937_64 rng(8);
    const auto law = testing::RandomLaw(rng, 3, 2);
    const auto others = Others({0, 0, 1});
    const auto pmf = JointNextDeepPmf(s.kernel, 1, 0, others, law);
    const auto blend = Blend(others, 0);
    for (int y = 0; y < 3; ++y) {
      Counts e(3, 0);
      e[y] = 1;
      double row = 0.0;
      for (int u = 0; u < 2; ++u) row += law(2, u) * s.kernel.Eval(1, y, 2, u, blend);
      CHECK(std::abs(pmf.ProbabilityOf(e) - row) < 1e-15);
    }
  }
  SUBCASE("seeded models match enumeration, marginals and normalization") {
    for (int seed = 0; seed < 30; ++seed) {
      testing::RandomModelOptions o;
      o.n = 2 + seed % 4;
      o.num_states = 2 + seed % 2;
      o.num_actions = 2 + (seed / 2) % 2;
      const auto s = testing::RandomModel(200 + seed, o);
      std::mt19937_64 rng(seed);
      const auto law = testing::RandomLaw(rng, o.num_states, o.num_actions);
      const auto d = testing::RandomDeepState(rng, o.n, o.num_states);
      int x = 0;
      while (d.counts[x] == 0) ++x;
      const auto others = OthersFromFull(d, x);
      const auto pmf = JointNextDeepPmf(s.kernel, 1, x, others, law);
      CHECK(std::abs(pmf.Mass() - 1.0) < 1e-9);
      for (double p : pmf.probs) CHECK(p >= 0.0);
      for (const auto& [c, p] : testing::BruteNextOthers(s.kernel, 1, x, others.counts, law)) {
        CHECK(std::abs(pmf.ProbabilityOf(c) - p) < 1e-10);
      }
      for (int y = 0; y < o.num_states; ++y) {
        const auto marginal = MarginalNextCountPmf(s.kernel, 1, y, x, others, law);
        std::vector<double> from_joint(others.total() + 1, 0.0);
        for (std::size_t i = 0; i < pmf.support.size(); ++i) {
          from_joint[pmf.support[i][y]] += pmf.probs[i];
        }
        for (std::size_t k = 0; k < marginal.size(); ++k) {
          CHECK(std::abs(marginal[k] - from_joint[k]) < 1e-10);
        }
      }
    }
  }
  SUBCASE("decoupled kernels ignore the deviator's state") {
    testing::RandomModelOptions o;
    o.n = 5;
    o.num_states = 3;
    o.coupled_kernel = false;
    const auto s = testing::RandomModel(9, o);
    std::mt19937_64 rng(9);
    const auto law = testing::RandomLaw(rng, 3, 2);
    const auto others = Others({1, 2, 1});
    const auto a = JointNextDeepPmfDense(s.kernel, 1, 0, others, law);
    const auto b = JointNextDeepPmfDense(s.kernel, 1, 1, others, law);
    const auto c = JointNextDeepPmfDense(s.kernel, 1, 2, others, law);
    CHECK(a == b);
    CHECK(a == c);
  }
  SUBCASE("support cap") {
    testing::RandomModelOptions o;
    o.n = 40;
    o.num_states = 3;
    const auto s = testing::RandomModel(1, o);
    try {
      JointNextDeepPmf(s.kernel, 1, 0, Others({13, 13, 13}), Uniform(3, 2), 100);
      FAIL("expected a cap error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSupportCap);
      CHECK(std::string(e.what()).find("exact kernel too large; reduce n or |X|") !=
            std::string::npos);
    }
  }
}

TEST_CASE("joint action law") {
  SUBCASE("pure law is a point mass") {
    const std::vector<int> pure = {1, 0};
    const auto pmf = JointActionPmf(Others({2, 3}), LocalLaw::Pure(pure, 2));
    REQUIRE(pmf.support.size() == 1);
    CHECK(pmf.support[0] == Counts{0, 2, 3, 0});
  }
  SUBCASE("one other player mixing evenly") {
    const auto pmf = JointActionPmf(Others({1, 0}), Uniform(2, 2));
    REQUIRE(pmf.support.size() == 2);
    CHECK(pmf.ProbabilityOf({1, 0, 0, 0}) == 0.5);
    CHECK(pmf.ProbabilityOf({0, 1, 0, 0}) == 0.5);
  }
  SUBCASE("n=4 matches enumeration over the three others' draws") {
    for (int seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      const auto law = testing::RandomLaw(rng, 2, 2 + seed % 2);
      const auto d = testing::RandomDeepState(rng, 3, 2);
      const auto pmf = JointActionPmf(Others(d.counts), law);
      double err = 0.0;
      for (const auto& [c, p] : testing::BruteJointAction(d.counts, law, 2 + seed % 2)) {
        err = std::max(err, std::abs(pmf.ProbabilityOf(c) - p));
      }
      CHECK(err < 1e-12);
      CHECK(std::abs(pmf.Mass() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("expected stage cost") {
  SUBCASE("constant cost") {
    auto s = BuildExample1Small();
    s.cost = MakeConstantCost(2, 3, 1.0);
    const std::vector<double> row = {0.2, 0.3, 0.5};
    CHECK(ExpectedStageCost(s, 1, 0, DeepState{{4, 6}}, row, Uniform(2, 3)) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("example 1 underload fee") {
    const auto s = BuildExample1();
    const std::vector<double> row = {1.0, 0.0, 0.0};
    CHECK(ExpectedStageCost(s, 1, 0, DeepState{{80, 20}}, row, Uniform(2, 3)) == 5.0);
  }
  SUBCASE("general costs match enumeration over action splits") {
    for (int seed = 0; seed < 12; ++seed) {
      testing::RandomModelOptions o;
      o.n = 2 + seed % 3;
      o.num_states = 2 + seed % 2;
      o.num_actions = 2 + (seed / 3) % 2;
      o.cost_class = seed % 2 ? Coupling::kGeneral : Coupling::kSeparable;
      const auto s = testing::RandomModel(300 + seed, o);
      std::mt19937_64 rng(seed);
      const auto law = testing::RandomLaw(rng, o.num_states, o.num_actions);
      const auto row = testing::RandomSimplexPoint(rng, o.num_actions);
      const auto d = testing::RandomDeepState(rng, o.n, o.num_states);
      int x = 0;
      while (d.counts[x] == 0) ++x;
      const double got = ExpectedStageCost(s, 1, x, d, row, law);
      const double want = testing::BruteExpectedStageCost(s, 1, x, d.counts, row, law);
      CHECK(std::abs(got - want) < 1e-10);
    }
  }
  SUBCASE("mixed rows are convex combinations of pure rows") {
    testing::RandomModelOptions o;
    o.n = 4;
    o.num_actions = 3;
    o.cost_class = Coupling::kGeneral;
    const auto s = testing::RandomModel(17, o);
    std::mt19937_64 rng(17);
    const auto law = testing::RandomLaw(rng, 2, 3);
    const auto row = testing::RandomSimplexPoint(rng, 3);
    const DeepState d{{2, 2}};
    double mix = 0.0;
    for (int u = 0; u < 3; ++u) {
      std::vector<double> e(3, 0.0);
      e[u] = 1.0;
      mix += row[u] * ExpectedStageCost(s, 1, 1, d, e, law);
    }
    CHECK(std::abs(ExpectedStageCost(s, 1, 1, d, row, law) - mix) < 1e-12);
  }
}

TEST_CASE("mean-field step") {
  SUBCASE("identity kernel leaves m alone") {
    const MeanField m = {0.2, 0.5, 0.3};
    CHECK(MeanFieldStep(Identity(3, 2), 1, m, Uniform(3, 2)) == m);
  }
  SUBCASE("point mass input returns the kernel row") {
    testing::RandomModelOptions o;
    o.num_states = 3;
    const auto s = testing::RandomModel(21, o);
    std::mt19937_64 rng(21);
    const auto law = testing::RandomLaw(rng, 3, 2);
    const MeanField m = {0.0, 1.0, 0.0};
    const auto next = MeanFieldStep(s.kernel, 1, m, law);
    for (int y = 0; y < 3; ++y) {
      double want = 0.0;
      for (int u = 0; u < 2; ++u) want += law(1, u) * s.kernel.Eval(1, y, 1, u, m);
      CHECK(std::abs(next[y] - want) < 1e-15);
    }
  }
  SUBCASE("example 1 under plain requests") {
    const std::vector<int> pure = {0, 0};
    const auto next = MeanFieldStep(BuildExample1().kernel, 1, {0.5, 0.5},
                                    LocalLaw::Pure(pure, 3));
    CHECK(next[0] == doctest::Approx(0.5 * 0.7 + 0.5 * 0.3).epsilon(1e-15));
    CHECK(next[1] == doctest::Approx(0.5 * 0.3 + 0.5 * 0.7).epsilon(1e-15));
  }
  SUBCASE("simplex preserved, linear for d-independent kernels") {
    testing::RandomModelOptions o;
    o.num_states = 3;
    o.coupled_kernel = false;
    const auto s = testing::RandomModel(22, o);
    std::mt19937_64 rng(22);
    const auto law = testing::RandomLaw(rng, 3, 2);
    const auto a = testing::RandomSimplexPoint(rng, 3);
    const auto b = testing::RandomSimplexPoint(rng, 3);
    std::vector<double> mix(3);
    for (int i = 0; i < 3; ++i) mix[i] = 0.3 * a[i] + 0.7 * b[i];
    const auto fa = MeanFieldStep(s.kernel, 1, a, law);
    const auto fb = MeanFieldStep(s.kernel, 1, b, law);
    const auto fm = MeanFieldStep(s.kernel, 1, mix, law);
    CHECK(std::abs(Sum(fm) - 1.0) < 1e-12);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(fm[i] - (0.3 * fa[i] + 0.7 * fb[i])) < 1e-15);
  }
}

TEST_CASE("infinite-population stage cost") {
  const std::vector<double> row = {0.5, 0.5, 0.0};
  auto s = BuildExample1();
  CHECK(InfiniteStageCost(s.cost, 1, 0, {0.5, 0.5}, row, Uniform(2, 3)) == 0.0);
  s.cost = MakeConstantCost(2, 3, 2.5);
  CHECK(InfiniteStageCost(s.cost, 1, 1, {0.1, 0.9}, row, Uniform(2, 3)) == 2.5);

  SUBCASE("large-n limit of the finite expectation") {
    testing::RandomModelOptions o;
    o.n = 10000;
    o.num_states = 2;
    o.cost_class = Coupling::kGeneral;
    const auto g = testing::RandomModel(31, o);
    std::mt19937_64 rng(31);
    const auto law = testing::RandomLaw(rng, 2, 2);
    const auto own = testing::RandomSimplexPoint(rng, 2);
    const DeepState d{{3000, 7000}};
    const auto mc = ExpectedStageCostMonteCarlo(g, 1, 0, d, own, law, 4000, 5);
    const double limit = InfiniteStageCost(g.cost, 1, 0, d.Probabilities(), own, law);
    CHECK(mc.standard_error > 0.0);
    CHECK(std::abs(mc.mean - limit) <= 3.0 * mc.standard_error);
  }
}

TEST_CASE("pmf cache returns the direct computation and respects its budget") {
  testing::RandomModelOptions o;
  o.n = 6;
  o.num_states = 3;
  const auto s = testing::RandomModel(41, o);
  std::mt19937_64 rng(41);
  const auto law = testing::RandomLaw(rng, 3, 2);
  const auto others = Others({2, 2, 1});
  PmfCache cache;
  const auto a = cache.GetOrCompute(s.kernel, 1, 0, others, law);
  const auto b = cache.GetOrCompute(s.kernel, 1, 0, others, law);
  CHECK(*a == JointNextDeepPmfDense(s.kernel, 1, 0, others, law));
  CHECK(a == b);
  CHECK(cache.hits() == 1);
  CHECK(cache.size() == 1);
  PmfCache tiny(1);
  tiny.GetOrCompute(s.kernel, 1, 0, others, law);
  CHECK(tiny.size() == 0);
}
