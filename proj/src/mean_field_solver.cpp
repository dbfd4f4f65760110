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

#include "popgame/mean_field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "popgame/error.hpp"

namespace popgame {

// ------------------------------------------------------------ grid

SimplexGrid::SimplexGrid(int num_states, int resolution, std::int64_t support_cap)
    : num_states_(num_states),
      resolution_(resolution),
      index_(std::max(resolution, 0), std::max(num_states, 1)) {
  if (resolution < 1) throw Error(ErrorCode::kInvalidArgument, "grid resolution must be >= 1");
  if (num_states < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one state");
  lattice_ = index_.Enumerate(support_cap);
}

MeanField SimplexGrid::Node(std::int64_t node) const {
  MeanField m(num_states_);
  for (int x = 0; x < num_states_; ++x) {
    m[x] = static_cast<double>(lattice_[node][x]) / resolution_;
  }
  return m;
}

std::int64_t SimplexGrid::Project(std::span<const double> m) const {
  const int k = resolution_;
  Counts lattice(num_states_);
  std::vector<double> frac(num_states_);
  int used = 0;
  for (int x = 0; x < num_states_; ++x) {
    const double scaled = std::max(m[x], 0.0) * k;
    const double nearest = std::round(scaled);
    if (std::abs(scaled - nearest) < 1e-9) {
      lattice[x] = static_cast<int>(nearest);
      frac[x] = 0.0;
    } else {
      lattice[x] = static_cast<int>(std::floor(scaled));
      frac[x] = scaled - lattice[x];
    }
    used += lattice[x];
  }
  std::vector<int> order(num_states_);
  std::iota(order.begin(), order.end(), 0);
  // Larger remainders first; among equal ones the higher index, which gives
  // the lower canonical rank.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a > b;
  });
  int missing = k - used;
  for (int i = 0; missing > 0; i = (i + 1) % num_states_, --missing) ++lattice[order[i]];
  // Mass above one (inputs off the simplex) is removed from the smallest
  // remainders.
  for (int i = num_states_ - 1; missing < 0; i = (i + num_states_ - 1) % num_states_) {
    if (lattice[order[i]] > 0) {
      --lattice[order[i]];
      ++missing;
    }
  }
  return index_.Rank(lattice);
}

SimplexGrid BuildGrid(int num_states, int resolution, std::int64_t support_cap) {
  return SimplexGrid(num_states, resolution, support_cap);
}

// ------------------------------------------------------------ strategy

const LocalLaw& NSStrategy::At(int t) const {
  if (t < 1 || t > stages()) {
    throw Error(ErrorCode::kStrategyGap,
                "no-sharing strategy has no law for stage " + std::to_string(t));
  }
  return laws[t - 1];
}

double MeanFieldSolution::Value(int t, int x, std::int64_t node) const {
  const std::size_t slice = stationary ? 0 : static_cast<std::size_t>(t - 1);
  return values[slice][static_cast<std::size_t>(x) * grid.size() + node];
}

const LocalLaw& MeanFieldSolution::LawAt(int t, std::int64_t node) const {
  const std::size_t slice = stationary ? 0 : static_cast<std::size_t>(t - 1);
  if (slice >= laws.size()) {
    throw Error(ErrorCode::kStrategyGap, "mean-field law map has no stage " + std::to_string(t));
  }
  return laws[slice][node];
}

namespace {

// Infinite-population node: every state carries mass in the limit, and the
// continuation is read at the projection of the next mean field.
class MeanFieldStageGame final : public StageGame {
 public:
  MeanFieldStageGame(const GameSpec& spec, const SimplexGrid& grid, int t, MeanField m,
                     std::span<const double> next)
      : spec_(spec), grid_(grid), t_(t), m_(std::move(m)), next_(next) {
    active_.resize(spec.num_states());
    std::iota(active_.begin(), active_.end(), 0);
    weight_ = spec.horizon.StageWeight(t);
    continuation_ = spec.horizon.finite() ? 1.0 : spec.horizon.beta;
    has_next_ = std::any_of(next.begin(), next.end(), [](double v) { return v != 0.0; });
  }

  int num_states() const override { return spec_.num_states(); }
  int num_actions() const override { return spec_.num_actions(); }
  const std::vector<int>& active_states() const override { return active_; }

  void ActionValues(const LocalLaw& law, std::vector<double>& q) const override {
    const int nx = spec_.num_states();
    const int nu = spec_.num_actions();
    q.assign(static_cast<std::size_t>(nx) * nu, 0.0);
    std::int64_t node = 0;
    if (has_next_) node = grid_.Project(MeanFieldStep(spec_.kernel, t_, m_, law));
    std::vector<double> own(nu);
    for (int x = 0; x < nx; ++x) {
      for (int u = 0; u < nu; ++u) {
        std::fill(own.begin(), own.end(), 0.0);
        own[u] = 1.0;
        double value = weight_ * InfiniteStageCost(spec_.cost, t_, x, m_, own, law);
        if (has_next_) {
          double expect = 0.0;
          for (int y = 0; y < nx; ++y) {
            expect += spec_.kernel.Eval(t_, y, x, u, m_) *
                      next_[static_cast<std::size_t>(y) * grid_.size() + node];
          }
          value += continuation_ * expect;
        }
        q[static_cast<std::size_t>(x) * nu + u] = value;
      }
    }
  }

 private:
  const GameSpec& spec_;
  const SimplexGrid& grid_;
  int t_;
  MeanField m_;
  std::span<const double> next_;
  std::vector<int> active_;
  double weight_ = 1.0;
  double continuation_ = 1.0;
  bool has_next_ = false;
};

struct NodeOutcome {
  LocalLaw law;
  std::vector<double> values;
  FixedPointEntry entry;
};

// Solves every grid node against `next` and writes values and laws.
double SweepGrid(const GameSpec& spec, const SimplexGrid& grid, int t,
                 const std::vector<double>& next, std::vector<double>& values,
                 std::vector<LocalLaw>& laws, std::vector<FixedPointEntry>* entries,
                 const MeanFieldOptions& options, const std::vector<double>* previous) {
  const std::int64_t size = grid.size();
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  std::vector<NodeOutcome> outcomes(size);
  ForEachIndex(size, options.execution, [&](std::int64_t node) {
    MeanFieldStageGame game(spec, grid, t, grid.Node(node), next);
    FixedPointResult fp = SolveStageFixedPoint(game, options.fixed_point);
    NodeOutcome& out = outcomes[node];
    out.values.assign(nx, 0.0);
    for (int x = 0; x < nx; ++x) {
      double v = 0.0;
      for (int u = 0; u < nu; ++u) v += fp.law(x, u) * fp.q[static_cast<std::size_t>(x) * nu + u];
      out.values[x] = v;
    }
    out.entry = {t, grid.Lattice(node), fp.iterations, fp.residual, fp.converged};
    out.law = std::move(fp.law);
  });
  values.assign(static_cast<std::size_t>(nx) * size, 0.0);
  laws.resize(size);
  double diff = 0.0;
  for (std::int64_t node = 0; node < size; ++node) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t at = static_cast<std::size_t>(x) * size + node;
      values[at] = outcomes[node].values[x];
      if (previous != nullptr) diff = std::max(diff, std::abs(values[at] - (*previous)[at]));
    }
    laws[node] = std::move(outcomes[node].law);
    if (entries != nullptr) entries->push_back(std::move(outcomes[node].entry));
  }
  return diff;
}

void CheckInitial(const GameSpec& spec) {
  if (static_cast<int>(spec.initial_dist.size()) != spec.num_states()) {
    throw Error(ErrorCode::kInvalidArgument, "initial distribution has the wrong length");
  }
}

}  // namespace

int TruncationHorizon(double beta, double max_cost, double tolerance) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "truncation needs beta in (0, 1)");
  }
  if (max_cost <= 0.0) return 1;
  const double need = std::log(tolerance * (1.0 - beta) / max_cost) / std::log(beta);
  return std::max(1, static_cast<int>(std::ceil(need - 1e-12)));
}

NSStrategy ForwardPass(const GameSpec& spec, const MeanFieldSolution& solution,
                       const MeanField& m_start, int t_start, int last_stage) {
  NSStrategy ns;
  ns.grid_resolution = solution.grid.resolution();
  MeanField m = m_start;
  for (int t = t_start; t <= last_stage; ++t) {
    const std::int64_t node = solution.grid.Project(m);
    const LocalLaw& law = solution.LawAt(t, node);
    ns.trajectory.push_back(m);
    ns.laws.push_back(law);
    const std::size_t slice = solution.stationary ? 0 : static_cast<std::size_t>(t - 1);
    const std::size_t entry = slice * solution.grid.size() + node;
    ns.residuals.push_back(entry < solution.report.entries.size()
                               ? solution.report.entries[entry].residual
                               : 0.0);
    if (t < last_stage) m = MeanFieldStep(spec.kernel, t, m, law);
  }
  return ns;
}

NSStrategy BeliefShock(const GameSpec& spec, const MeanFieldSolution& solution, int t_shock,
                       const MeanField& m_shock) {
  const NSStrategy& base = solution.ns;
  if (t_shock < 1 || t_shock > base.stages()) {
    throw Error(ErrorCode::kInvalidArgument,
                "shock stage " + std::to_string(t_shock) + " outside the horizon");
  }
  NSStrategy tail = ForwardPass(spec, solution, m_shock, t_shock, base.stages());
  NSStrategy out;
  out.grid_resolution = base.grid_resolution;
  for (int t = 1; t < t_shock; ++t) {
    out.trajectory.push_back(base.trajectory[t - 1]);
    out.laws.push_back(base.laws[t - 1]);
    out.residuals.push_back(base.residuals[t - 1]);
  }
  for (int i = 0; i < tail.stages(); ++i) {
    out.trajectory.push_back(tail.trajectory[i]);
    out.laws.push_back(tail.laws[i]);
    out.residuals.push_back(tail.residuals[i]);
  }
  return out;
}

MeanFieldSolution SolveSmfeFinite(const GameSpec& spec, const SimplexGrid& grid,
                                  const MeanFieldOptions& options) {
  if (!spec.horizon.finite()) {
    throw Error(ErrorCode::kInvalidArgument, "finite mean-field solver needs a finite horizon");
  }
  if (grid.num_states() != spec.num_states()) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimension does not match the state space");
  }
  CheckInitial(spec);
  const int horizon = spec.horizon.stages;
  MeanFieldSolution sol{grid, false, {}, {}, {}, {}};
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * grid.size();
  sol.values.assign(horizon + 1, std::vector<double>(slice_size, 0.0));
  sol.laws.assign(horizon, {});
  // Entries are stored stage-major (t = 1 first) so the forward pass can
  // index them.
  std::vector<std::vector<FixedPointEntry>> per_stage(horizon);
  for (int t = horizon; t >= 1; --t) {
    SweepGrid(spec, grid, t, sol.values[t], sol.values[t - 1], sol.laws[t - 1],
              &per_stage[t - 1], options, nullptr);
  }
  for (auto& stage : per_stage) {
    for (auto& e : stage) sol.report.entries.push_back(std::move(e));
  }
  sol.ns = ForwardPass(spec, sol, spec.initial_dist, 1, horizon);
  return sol;
}

MeanFieldSolution SolveSmfeDiscounted(const GameSpec& spec, const SimplexGrid& grid,
                                      const MeanFieldOptions& options) {
  if (spec.horizon.finite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "discounted mean-field solver needs a discounted horizon");
  }
  if (grid.num_states() != spec.num_states()) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimension does not match the state space");
  }
  CheckInitial(spec);
  const double beta = spec.horizon.beta;
  MeanFieldSolution sol{grid, true, {}, {}, {}, {}};
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * grid.size();
  std::vector<double> current(slice_size, 0.0), next;
  std::vector<LocalLaw> laws;
  const double stop = options.vi_tolerance * (1.0 - beta) / (2.0 * beta);
  sol.report.vi_converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const double diff =
        SweepGrid(spec, grid, 1, current, next, laws, nullptr, options, &current);
    sol.report.sweep_differences.push_back(diff);
    current.swap(next);
    if (diff <= stop) {
      sol.report.vi_converged = true;
      break;
    }
  }
  sol.laws.assign(1, {});
  sol.report.bellman_residual = SweepGrid(spec, grid, 1, current, next, sol.laws[0],
                                          &sol.report.entries, options, &current);
  sol.values = {std::move(next)};

  int trunc = options.trunc_T;
  if (trunc <= 0) {
    double top = 0.0;
    for (double v : sol.values[0]) top = std::max(top, v);
    trunc = TruncationHorizon(beta, (1.0 - beta) * top, options.trunc_tolerance);
  }
  sol.ns = ForwardPass(spec, sol, spec.initial_dist, 1, trunc);
  return sol;
}

}  // namespace popgame
