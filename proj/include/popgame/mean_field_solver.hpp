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

#ifndef POPGAME_MEAN_FIELD_SOLVER_HPP_
#define POPGAME_MEAN_FIELD_SOLVER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "popgame/composition.hpp"
#include "popgame/deep_dynamics.hpp"
#include "popgame/dss_solver.hpp"
#include "popgame/game_model.hpp"
#include "popgame/parallel.hpp"
#include "popgame/stage_fixed_point.hpp"

namespace popgame {

// Probability vectors with entries in {0, 1/k, ..., 1}, ordered like
// CompositionIndex(k, |X|).
class SimplexGrid {
 public:
  SimplexGrid(int num_states, int resolution, std::int64_t support_cap = kDefaultSupportCap);

  int num_states() const { return num_states_; }
  int resolution() const { return resolution_; }
  std::int64_t size() const { return static_cast<std::int64_t>(lattice_.size()); }

  const Counts& Lattice(std::int64_t node) const { return lattice_[node]; }
  MeanField Node(std::int64_t node) const;
  std::int64_t Rank(std::span<const int> lattice) const { return index_.Rank(lattice); }

  // L1-nearest node by largest-remainder rounding; ties go to the lowest
  // canonical rank.
  std::int64_t Project(std::span<const double> m) const;

 private:
  int num_states_;
  int resolution_;
  CompositionIndex index_;
  std::vector<Counts> lattice_;
};

SimplexGrid BuildGrid(int num_states, int resolution,
                      std::int64_t support_cap = kDefaultSupportCap);

struct MeanFieldOptions {
  FixedPointOptions fixed_point;
  double vi_tolerance = 1e-8;
  int max_sweeps = 100000;
  Execution execution = Execution::kParallel;
  // Forward-pass length in discounted mode; 0 derives it from trunc_tolerance.
  int trunc_T = 0;
  double trunc_tolerance = 1e-8;
};

// No-sharing strategy: a deterministic mean-field flow and one law per stage.
struct NSStrategy {
  std::vector<MeanField> trajectory;  // m_1 .. m_T (unprojected)
  std::vector<LocalLaw> laws;         // gamma_1 .. gamma_T
  int grid_resolution = 0;
  std::vector<double> residuals;      // fixed-point residual of the node used at t

  int stages() const { return static_cast<int>(laws.size()); }
  // Throws kStrategyGap outside 1..stages().
  const LocalLaw& At(int t) const;
};

struct MeanFieldSolution {
  SimplexGrid grid;
  bool stationary = false;
  // Finite: slices[t-1] for t = 1..T+1 (last one zero). Stationary: one slice.
  // Layout [x * |grid| + node].
  std::vector<std::vector<double>> values;
  std::vector<std::vector<LocalLaw>> laws;  // [slice][node]
  FixedPointReport report;
  NSStrategy ns;

  double Value(int t, int x, std::int64_t node) const;
  const LocalLaw& LawAt(int t, std::int64_t node) const;
};

MeanFieldSolution SolveSmfeFinite(const GameSpec& spec, const SimplexGrid& grid,
                                  const MeanFieldOptions& options = {});

MeanFieldSolution SolveSmfeDiscounted(const GameSpec& spec, const SimplexGrid& grid,
                                      const MeanFieldOptions& options = {});

// Forward pass from m at stage t_start through `last_stage`, reading laws from
// the solved maps at the projected flow.
NSStrategy ForwardPass(const GameSpec& spec, const MeanFieldSolution& solution,
                       const MeanField& m_start, int t_start, int last_stage);

// Replaces the tail from t_shock on with the flow restarted at m_shock; the
// prefix is kept.
NSStrategy BeliefShock(const GameSpec& spec, const MeanFieldSolution& solution, int t_shock,
                       const MeanField& m_shock);

// Smallest T with beta^T * max_cost / (1 - beta) <= tolerance.
int TruncationHorizon(double beta, double max_cost, double tolerance);

}  // namespace popgame

#endif  // POPGAME_MEAN_FIELD_SOLVER_HPP_
