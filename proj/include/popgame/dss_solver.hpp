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

#ifndef POPGAME_DSS_SOLVER_HPP_
#define POPGAME_DSS_SOLVER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "popgame/composition.hpp"
#include "popgame/deep_dynamics.hpp"
#include "popgame/game_model.hpp"
#include "popgame/parallel.hpp"
#include "popgame/stage_fixed_point.hpp"

namespace popgame {

// All deep states of n players over |X| states, ranked by CompositionIndex,
// together with the map that re-inserts a player into an others' count
// vector.
class DeepStateSpace {
 public:
  DeepStateSpace(int n, int num_states, std::int64_t support_cap = kDefaultSupportCap);

  int n() const { return n_; }
  int num_states() const { return num_states_; }
  std::int64_t size() const { return static_cast<std::int64_t>(states_.size()); }

  const Counts& State(std::int64_t rank) const { return states_[rank]; }
  std::int64_t Rank(std::span<const int> counts) const { return full_.Rank(counts); }
  // Rank in this space of (others + one player at x), where `others_rank`
  // indexes compositions of n-1.
  std::int64_t Lift(int x, std::int64_t others_rank) const {
    return lift_[x][others_rank];
  }
  const CompositionIndex& index() const { return full_; }
  const CompositionIndex& others_index() const { return others_; }

 private:
  int n_;
  int num_states_;
  CompositionIndex full_;
  CompositionIndex others_;
  std::vector<Counts> states_;
  std::vector<std::vector<std::int64_t>> lift_;
};

// Values V_t(x, d) of the generic player. Finite mode holds stages 1..T+1
// (the last slice is identically zero); stationary mode holds one slice.
// Slices are laid out [x * |deep states| + rank].
struct ValueTable {
  int num_states = 0;
  std::int64_t num_deep = 0;
  std::vector<std::vector<double>> slices;

  double operator()(int slice, int x, std::int64_t rank) const {
    return slices[slice][static_cast<std::size_t>(x) * num_deep + rank];
  }
};

// Markov deep-state strategy: one local law per (stage, deep state), shared
// by every player.
struct EquilibriumStrategy {
  enum class Mode { kFinite, kStationary };

  Mode mode = Mode::kFinite;
  int n = 0;
  int num_states = 0;
  int num_actions = 0;
  int stages = 0;  // 1 in stationary mode
  std::vector<std::vector<LocalLaw>> laws;  // [stage - 1][rank]

  // Throws kStrategyGap when t is outside the covered stages.
  const LocalLaw& At(int t, std::span<const int> counts) const;
  const LocalLaw& At(int t, std::int64_t rank) const;
};

struct FixedPointEntry {
  int t = 0;
  Counts d;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct FixedPointReport {
  std::vector<FixedPointEntry> entries;
  int multiple_equilibria_nodes = 0;
  // Value-iteration diagnostics (discounted solvers only).
  std::vector<double> sweep_differences;
  double bellman_residual = 0.0;
  bool vi_converged = true;

  bool AllConverged() const;
  double MaxResidual() const;
  int NonConverged() const;
  // max_k diff[k+1] / diff[k]; 0 with fewer than two sweeps.
  double MaxContractionRatio() const;
  // max_k diff[k+1] - beta * diff[k]; the contraction inequality holds when
  // this is <= 0 up to rounding.
  double MaxContractionExcess(double beta) const;
};

struct DssOptions {
  FixedPointOptions fixed_point;
  double vi_tolerance = 1e-8;
  int max_sweeps = 100000;
  std::int64_t support_cap = kDefaultSupportCap;
  Execution execution = Execution::kParallel;
  // Re-solves every node from a second initialization and counts nodes whose
  // laws differ by more than 1e-6.
  bool check_multiplicity = false;
  bool use_cache = true;
  // Cached PMF entries are bounded by this many doubles in total.
  std::size_t cache_budget = 1u << 23;
};

struct DssSolution {
  EquilibriumStrategy strategy;
  ValueTable values;
  FixedPointReport report;
};

struct BestResponseRows {
  // Minimizing pure actions per state (empty for states with d(x) = 0).
  std::vector<std::vector<int>> minimizers;
  std::vector<double> values;  // min_u q(x,u), 0 for inactive states
  std::vector<double> q;       // q[x * |U| + u]
};

// Objective of a player at each state of d against the others' law, with
// continuation read from `next_values` (one value slice for stage t+1, or
// the current iterate in discounted mode). Finite mode weights the stage
// cost by the horizon discount; discounted mode multiplies the
// continuation by beta.
BestResponseRows BestResponse(const GameSpec& spec, const DeepStateSpace& space, int t,
                              const DeepState& d, const LocalLaw& others_law,
                              std::span<const double> next_values,
                              double tie_tolerance = 1e-12,
                              std::int64_t support_cap = kDefaultSupportCap);

FixedPointResult FixedPointStage(const GameSpec& spec, const DeepStateSpace& space, int t,
                                 const DeepState& d, std::span<const double> next_values,
                                 const FixedPointOptions& options,
                                 std::int64_t support_cap = kDefaultSupportCap);

// Backward induction t = T..1 over every deep state.
DssSolution SolveFinite(const GameSpec& spec, const DssOptions& options = {});

// Value iteration on the stationary Bellman equation. Stops when the sup-norm
// change is at most vi_tolerance (1 - beta) / (2 beta).
DssSolution SolveDiscounted(const GameSpec& spec, const DssOptions& options = {});

// Stationary value iteration truncated after exactly `sweeps` sweeps from
// V = 0; slices[k] holds the iterate after k sweeps (slices[0] = 0).
std::vector<std::vector<double>> ValueIterationSweeps(const GameSpec& spec, int sweeps,
                                                      const DssOptions& options = {});

struct AuditResult {
  double max_gap = 0.0;
  int t = 0;
  int x = 0;
  Counts d;
};

// Best single-deviator gain against the frozen strategy, maximized over every
// starting stage and (x, d): J_on - J_dev from the deviator's best-response
// dynamic program.
AuditResult ExploitabilityAudit(const GameSpec& spec, const EquilibriumStrategy& strategy,
                                const DssOptions& options = {});

// E[V_1(x_1, d_1)] for the generic player with initial states i.i.d. from the
// model's initial distribution.
double ExpectedInitialValue(const GameSpec& spec, const DeepStateSpace& space,
                            std::span<const double> first_slice);

}  // namespace popgame

#endif  // POPGAME_DSS_SOLVER_HPP_
