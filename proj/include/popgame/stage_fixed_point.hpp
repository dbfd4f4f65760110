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

#ifndef POPGAME_STAGE_FIXED_POINT_HPP_
#define POPGAME_STAGE_FIXED_POINT_HPP_

#include <optional>
#include <vector>

#include "popgame/game_model.hpp"

namespace popgame {

// One node of a backward sweep seen as a symmetric game among the players:
// given the local law everybody else uses, ActionValues() fills
// q[x * |U| + u] with the objective (stage cost plus continuation) of a
// player at x taking pure action u. Only rows of active states are read.
class StageGame {
 public:
  virtual ~StageGame() = default;
  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual const std::vector<int>& active_states() const = 0;
  virtual void ActionValues(const LocalLaw& population, std::vector<double>& q) const = 0;
};

struct FixedPointOptions {
  double tolerance = 1e-8;
  int max_iters = 10000;
  // Actions whose values are within this relative gap count as tied.
  double tie_tolerance = 1e-12;
  // Newton refinement on the indifference equations of the iterate's support.
  bool polish = true;
  std::optional<LocalLaw> initial;
};

struct FixedPointResult {
  LocalLaw law;
  std::vector<double> q;  // action values against `law`
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// max over active x of  sum_u law(x)(u) q(x,u) - min_u q(x,u)  (>= 0).
double Exploitability(const StageGame& game, const LocalLaw& law,
                      const std::vector<double>& q);

// Pure best response to q, lowest action index among ties. Inactive rows are
// uniform.
LocalLaw PureBestResponse(const StageGame& game, const std::vector<double>& q,
                          double tie_tolerance);

// Averaged best-response iteration from the uniform law with step 1/(k+1).
// Every iteration also tests the pure best response as a candidate profile,
// and a support-restricted Newton solve is tried on a geometric schedule.
// On non-convergence the lowest-residual iterate is returned.
FixedPointResult SolveStageFixedPoint(const StageGame& game,
                                      const FixedPointOptions& options);

}  // namespace popgame

#endif  // POPGAME_STAGE_FIXED_POINT_HPP_
