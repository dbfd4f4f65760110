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

#ifndef POPGAME_POPULATION_SIMULATOR_HPP_
#define POPGAME_POPULATION_SIMULATOR_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popgame/deep_dynamics.hpp"
#include "popgame/dss_solver.hpp"
#include "popgame/game_model.hpp"
#include "popgame/mean_field_solver.hpp"
#include "popgame/parallel.hpp"

namespace popgame {

// Per-player states plus the deep state recounted from them.
struct PopulationState {
  std::vector<int> states;
  Counts counts;

  static PopulationState FromStates(std::vector<int> states, int num_states);
  bool Consistent() const;
};

// What a player does at stage t: the shared law at the current deep state,
// optionally overridden per player.
class SimulationPolicy {
 public:
  virtual ~SimulationPolicy() = default;
  virtual const LocalLaw& Law(int t, std::span<const int> counts) const = 0;
  // Pure action forced on `player`, or -1 to use the shared law.
  virtual int ForcedAction(int player, int t, int x) const {
    (void)player;
    (void)t;
    (void)x;
    return -1;
  }
};

class DssPolicy final : public SimulationPolicy {
 public:
  explicit DssPolicy(const EquilibriumStrategy& strategy) : strategy_(strategy) {}
  const LocalLaw& Law(int t, std::span<const int> counts) const override;

 private:
  const EquilibriumStrategy& strategy_;
};

class NsPolicy final : public SimulationPolicy {
 public:
  explicit NsPolicy(const NSStrategy& strategy) : strategy_(strategy) {}
  const LocalLaw& Law(int t, std::span<const int> counts) const override;

 private:
  const NSStrategy& strategy_;
};

// The base policy with one player pinned to a pure action: a deliberately
// index-dependent profile.
class PlantedPolicy final : public SimulationPolicy {
 public:
  PlantedPolicy(const SimulationPolicy& base, int player, int action)
      : base_(base), player_(player), action_(action) {}
  const LocalLaw& Law(int t, std::span<const int> counts) const override {
    return base_.Law(t, counts);
  }
  int ForcedAction(int player, int, int) const override {
    return player == player_ ? action_ : -1;
  }

 private:
  const SimulationPolicy& base_;
  int player_;
  int action_;
};

struct SimulationOptions {
  int stages = 1;
  std::int64_t replications = 1;
  std::uint64_t seed = 0;
  Execution execution = Execution::kParallel;
  bool store_paths = false;
  // When non-empty, replication r draws initial states from
  // initial_dists[r % size] instead of the model's distribution.
  std::vector<std::vector<double>> initial_dists;
  // Player i uses randomness stream stream_of_player[i] (identity if empty).
  std::vector<int> stream_of_player;
};

struct SimulationResult {
  std::int64_t replications = 0;
  int stages = 0;
  int n = 0;
  std::uint64_t seed = 0;
  // Generic-player cost: per replication the average over players.
  double mean_cost = 0.0;
  double standard_error = 0.0;
  std::vector<double> player_mean_cost;
  std::vector<double> replication_cost;
  // paths[r][t-1] = counts at stage t, t = 1..stages+1 (when stored).
  std::vector<std::vector<Counts>> paths;
  // player_costs[r][i] (when paths are stored).
  std::vector<std::vector<double>> player_costs;
};

// Monte Carlo rollout of the n-player system. Stage costs are weighted by
// beta^{t-1} in discounted mode and by the horizon's stage weight otherwise.
SimulationResult Simulate(const GameSpec& spec, const SimulationPolicy& policy,
                          const SimulationOptions& options);

struct PermutationOutcome {
  bool pass = false;
  bool paths_equal = false;
  bool costs_equal = false;
  std::vector<int> permutation;
};

// Runs the system twice, the second time with player labels permuted by a
// seeded derangement (no fixed points), and compares deep paths and
// relabeled costs exactly.
PermutationOutcome PermutationCheck(const GameSpec& spec, const SimulationPolicy& policy,
                                    int stages, std::int64_t replications, std::uint64_t seed,
                                    bool identity = false);

struct GoodnessOfFit {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  int bins = 0;
  bool pass = false;  // p >= significance
};

// Samples the others' next counts from (x, d, law) by simulating individual
// players, and tests the histogram against JointNextDeepPmfDense. Bins with
// expected count below 5 are pooled.
GoodnessOfFit OneStepHistogramTest(const GameSpec& spec, int t, int deviator_x,
                                   const DeepState& d, const LocalLaw& law,
                                   std::int64_t samples, std::uint64_t seed,
                                   double significance = 0.001);

GoodnessOfFit ChiSquareTest(const std::vector<std::int64_t>& observed,
                            const std::vector<double>& probs, double significance);

struct ConvergenceRow {
  int n = 0;
  double dss_value = 0.0;    // exact J*_n
  double ns_cost = 0.0;      // simulated cost of the NS strategy
  double ns_standard_error = 0.0;
  double gap = 0.0;          // |ns_cost - dss_value|
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // least-squares slope of log gap against log n
  // True when every gap is at most the previous one plus two combined
  // standard errors.
  bool non_increasing = false;
};

struct ConvergenceOptions {
  std::int64_t replications = 100000;
  std::uint64_t seed = 0;
  int grid_resolution = 0;  // 0: ceil(sqrt(n)) * 10
  DssOptions dss;
  MeanFieldOptions mean_field;
  Execution execution = Execution::kParallel;
};

ConvergenceTable ConvergenceExperiment(const std::function<GameSpec(int)>& model,
                                       const std::vector<int>& n_list,
                                       const ConvergenceOptions& options);

struct TremblingHandOutcome {
  NSStrategy shocked;
  SimulationResult baseline;
  SimulationResult perturbed;
  double delta = 0.0;
  double delta_standard_error = 0.0;  // paired, common random numbers
};

TremblingHandOutcome TremblingHandExperiment(const GameSpec& spec,
                                             const MeanFieldSolution& solution, int t_shock,
                                             const MeanField& m_shock,
                                             const SimulationOptions& options);

// Fraction of stages t >= from_stage (over all stored paths) whose count in
// `state` lies in [lower, upper].
double BandContainment(const SimulationResult& result, int state, int lower, int upper,
                       int from_stage);

}  // namespace popgame

#endif  // POPGAME_POPULATION_SIMULATOR_HPP_
