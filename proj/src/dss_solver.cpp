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

#include "popgame/dss_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "popgame/error.hpp"

namespace popgame {
namespace {

// One (t, d) node: players at the active states of d play against each other
// through the common law.
class DeepStageGame final : public StageGame {
 public:
  DeepStageGame(const GameSpec& spec, const DeepStateSpace& space, int t, const DeepState& d,
                std::span<const double> next, PmfCache* cache, std::int64_t cap)
      : spec_(spec), space_(space), t_(t), d_(d), next_(next), cache_(cache), cap_(cap) {
    for (int x = 0; x < spec.num_states(); ++x) {
      if (d.counts[x] > 0) active_.push_back(x);
    }
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
    std::vector<double> own(nu, 0.0);
    std::vector<double> carry(nx, 0.0);
    const std::vector<double> dist = d_.Probabilities();
    for (int x : active_) {
      if (has_next_) Continuation(x, law, carry);
      for (int u = 0; u < nu; ++u) {
        std::fill(own.begin(), own.end(), 0.0);
        own[u] = 1.0;
        double value = weight_ * ExpectedStageCost(spec_, t_, x, d_, own, law, cap_);
        if (has_next_) {
          double expect = 0.0;
          for (int y = 0; y < nx; ++y) expect += spec_.kernel.Eval(t_, y, x, u, dist) * carry[y];
          value += continuation_ * expect;
        }
        q[static_cast<std::size_t>(x) * nu + u] = value;
      }
    }
  }

 private:
  // carry[y] = E[ V_next(y, others' + e_y) ] for the deviator at x.
  void Continuation(int x, const LocalLaw& law, std::vector<double>& carry) const {
    const OthersDeepState others = OthersFromFull(d_, x);
    PmfCache::Value cached;
    std::vector<double> local;
    const std::vector<double>* pmf = nullptr;
    if (cache_ != nullptr) {
      cached = cache_->GetOrCompute(spec_.kernel, t_, x, others, law, cap_);
      pmf = cached.get();
    } else {
      local = JointNextDeepPmfDense(spec_.kernel, t_, x, others, law, cap_);
      pmf = &local;
    }
    const std::int64_t num_deep = space_.size();
    for (int y = 0; y < spec_.num_states(); ++y) {
      const double* slice = next_.data() + static_cast<std::size_t>(y) * num_deep;
      double acc = 0.0;
      for (std::size_t o = 0; o < pmf->size(); ++o) {
        const double p = (*pmf)[o];
        if (p != 0.0) acc += p * slice[space_.Lift(y, static_cast<std::int64_t>(o))];
      }
      carry[y] = acc;
    }
  }

  const GameSpec& spec_;
  const DeepStateSpace& space_;
  int t_;
  const DeepState& d_;
  std::span<const double> next_;
  PmfCache* cache_;
  std::int64_t cap_;
  std::vector<int> active_;
  double weight_ = 1.0;
  double continuation_ = 1.0;
  bool has_next_ = false;
};

double ActiveRowDistance(const LocalLaw& a, const LocalLaw& b,
                         const std::vector<int>& active) {
  double worst = 0.0;
  for (int x : active) {
    for (int u = 0; u < a.num_actions(); ++u) worst = std::max(worst, std::abs(a(x, u) - b(x, u)));
  }
  return worst;
}

struct NodeOutcome {
  LocalLaw law;
  std::vector<double> values;  // on-path value per state
  FixedPointEntry entry;
  bool multiple = false;
};

NodeOutcome SolveNode(const GameSpec& spec, const DeepStateSpace& space, int t,
                      std::int64_t rank, std::span<const double> next, PmfCache* cache,
                      const DssOptions& options) {
  const DeepState d{space.State(rank)};
  DeepStageGame game(spec, space, t, d, next, cache, options.support_cap);
  FixedPointResult fp = SolveStageFixedPoint(game, options.fixed_point);
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  NodeOutcome out;
  out.values.assign(nx, 0.0);
  for (int x : game.active_states()) {
    double v = 0.0;
    for (int u = 0; u < nu; ++u) v += fp.law(x, u) * fp.q[static_cast<std::size_t>(x) * nu + u];
    out.values[x] = v;
  }
  out.entry = {t, d.counts, fp.iterations, fp.residual, fp.converged};
  if (options.check_multiplicity) {
    FixedPointOptions alt = options.fixed_point;
    alt.initial = LocalLaw::Pure(std::vector<int>(nx, nu - 1), nu);
    const FixedPointResult other = SolveStageFixedPoint(game, alt);
    out.multiple = fp.converged && other.converged &&
                   ActiveRowDistance(fp.law, other.law, game.active_states()) > 1e-6;
  }
  out.law = std::move(fp.law);
  return out;
}

void RequireHorizon(const GameSpec& spec, bool finite) {
  if (spec.horizon.finite() != finite) {
    throw Error(ErrorCode::kInvalidArgument,
                finite ? "finite-horizon solver needs a finite horizon"
                       : "discounted solver needs a discounted horizon");
  }
}

EquilibriumStrategy EmptyStrategy(const GameSpec& spec, EquilibriumStrategy::Mode mode,
                                  int stages, std::int64_t num_deep) {
  EquilibriumStrategy s;
  s.mode = mode;
  s.n = spec.n;
  s.num_states = spec.num_states();
  s.num_actions = spec.num_actions();
  s.stages = stages;
  s.laws.assign(stages, std::vector<LocalLaw>(num_deep, LocalLaw(s.num_states, s.num_actions)));
  return s;
}

// One sweep of the stationary Bellman operator. Returns the sup-norm change.
double Sweep(const GameSpec& spec, const DeepStateSpace& space, const std::vector<double>& current,
             std::vector<double>& next_values, std::vector<LocalLaw>* laws,
             std::vector<FixedPointEntry>* entries, int* multiple, PmfCache* cache,
             const DssOptions& options) {
  const std::int64_t num_deep = space.size();
  const int nx = spec.num_states();
  next_values.assign(current.size(), 0.0);
  std::vector<NodeOutcome> outcomes(num_deep);
  ForEachIndex(num_deep, options.execution, [&](std::int64_t r) {
    outcomes[r] = SolveNode(spec, space, 1, r, current, cache, options);
  });
  double diff = 0.0;
  for (std::int64_t r = 0; r < num_deep; ++r) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t at = static_cast<std::size_t>(x) * num_deep + r;
      next_values[at] = outcomes[r].values[x];
      diff = std::max(diff, std::abs(next_values[at] - current[at]));
    }
    if (laws != nullptr) (*laws)[r] = std::move(outcomes[r].law);
    if (entries != nullptr) entries->push_back(std::move(outcomes[r].entry));
    if (multiple != nullptr && outcomes[r].multiple) ++*multiple;
  }
  return diff;
}

}  // namespace

// ------------------------------------------------------------ state space

DeepStateSpace::DeepStateSpace(int n, int num_states, std::int64_t support_cap)
    : n_(n),
      num_states_(num_states),
      full_(n, num_states),
      others_(std::max(n - 1, 0), num_states) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "population size must be >= 1");
  states_ = full_.Enumerate(support_cap);
  lift_.assign(num_states, std::vector<std::int64_t>(others_.size()));
  for (std::int64_t r = 0; r < others_.size(); ++r) {
    Counts c = others_.Unrank(r);
    for (int x = 0; x < num_states; ++x) {
      ++c[x];
      lift_[x][r] = full_.Rank(c);
      --c[x];
    }
  }
}

// ------------------------------------------------------------ strategy

const LocalLaw& EquilibriumStrategy::At(int t, std::int64_t rank) const {
  if (t < 1 || (mode == Mode::kFinite && t > stages)) {
    throw Error(ErrorCode::kStrategyGap,
                "strategy has no entry for stage " + std::to_string(t));
  }
  const int slice = mode == Mode::kFinite ? t - 1 : 0;
  if (rank < 0 || rank >= static_cast<std::int64_t>(laws[slice].size())) {
    throw Error(ErrorCode::kStrategyGap, "strategy has no entry for this deep state");
  }
  return laws[slice][rank];
}

const LocalLaw& EquilibriumStrategy::At(int t, std::span<const int> counts) const {
  int total = 0;
  for (int c : counts) total += c;
  if (static_cast<int>(counts.size()) != num_states || total != n) {
    throw Error(ErrorCode::kStrategyGap, "deep state does not match the strategy's population");
  }
  return At(t, CompositionIndex(n, num_states).Rank(counts));
}

// ------------------------------------------------------------ report

bool FixedPointReport::AllConverged() const { return NonConverged() == 0; }

int FixedPointReport::NonConverged() const {
  int bad = 0;
  for (const auto& e : entries) bad += e.converged ? 0 : 1;
  return bad;
}

double FixedPointReport::MaxResidual() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.residual);
  return worst;
}

double FixedPointReport::MaxContractionRatio() const {
  double worst = 0.0;
  for (std::size_t k = 1; k < sweep_differences.size(); ++k) {
    if (sweep_differences[k - 1] > 0.0) {
      worst = std::max(worst, sweep_differences[k] / sweep_differences[k - 1]);
    }
  }
  return worst;
}

double FixedPointReport::MaxContractionExcess(double beta) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < sweep_differences.size(); ++k) {
    worst = std::max(worst, sweep_differences[k] - beta * sweep_differences[k - 1]);
  }
  return sweep_differences.size() < 2 ? 0.0 : worst;
}

// ------------------------------------------------------------ node operations

BestResponseRows BestResponse(const GameSpec& spec, const DeepStateSpace& space, int t,
                              const DeepState& d, const LocalLaw& others_law,
                              std::span<const double> next_values, double tie_tolerance,
                              std::int64_t support_cap) {
  DeepStageGame game(spec, space, t, d, next_values, nullptr, support_cap);
  BestResponseRows out;
  game.ActionValues(others_law, out.q);
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  out.minimizers.assign(nx, {});
  out.values.assign(nx, 0.0);
  for (int x : game.active_states()) {
    const double* row = out.q.data() + static_cast<std::size_t>(x) * nu;
    const double best = *std::min_element(row, row + nu);
    const double slack = tie_tolerance * std::max(1.0, std::abs(best));
    for (int u = 0; u < nu; ++u) {
      if (row[u] <= best + slack) out.minimizers[x].push_back(u);
    }
    out.values[x] = best;
  }
  return out;
}

FixedPointResult FixedPointStage(const GameSpec& spec, const DeepStateSpace& space, int t,
                                 const DeepState& d, std::span<const double> next_values,
                                 const FixedPointOptions& options, std::int64_t support_cap) {
  DeepStageGame game(spec, space, t, d, next_values, nullptr, support_cap);
  return SolveStageFixedPoint(game, options);
}

// ------------------------------------------------------------ solvers

DssSolution SolveFinite(const GameSpec& spec, const DssOptions& options) {
  RequireHorizon(spec, true);
  const int horizon = spec.horizon.stages;
  DeepStateSpace space(spec.n, spec.num_states(), options.support_cap);
  const std::int64_t num_deep = space.size();
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * num_deep;

  DssSolution sol;
  sol.strategy = EmptyStrategy(spec, EquilibriumStrategy::Mode::kFinite, horizon, num_deep);
  sol.values.num_states = spec.num_states();
  sol.values.num_deep = num_deep;
  sol.values.slices.assign(horizon + 1, std::vector<double>(slice_size, 0.0));

  PmfCache cache(options.cache_budget);
  PmfCache* cache_ptr = options.use_cache ? &cache : nullptr;
  for (int t = horizon; t >= 1; --t) {
    std::vector<NodeOutcome> outcomes(num_deep);
    const std::vector<double>& next = sol.values.slices[t];
    ForEachIndex(num_deep, options.execution, [&](std::int64_t r) {
      outcomes[r] = SolveNode(spec, space, t, r, next, cache_ptr, options);
    });
    std::vector<double>& here = sol.values.slices[t - 1];
    for (std::int64_t r = 0; r < num_deep; ++r) {
      for (int x = 0; x < spec.num_states(); ++x) {
        here[static_cast<std::size_t>(x) * num_deep + r] = outcomes[r].values[x];
      }
      sol.strategy.laws[t - 1][r] = std::move(outcomes[r].law);
      sol.report.entries.push_back(std::move(outcomes[r].entry));
      if (outcomes[r].multiple) ++sol.report.multiple_equilibria_nodes;
    }
  }
  return sol;
}

DssSolution SolveDiscounted(const GameSpec& spec, const DssOptions& options) {
  RequireHorizon(spec, false);
  const double beta = spec.horizon.beta;
  DeepStateSpace space(spec.n, spec.num_states(), options.support_cap);
  const std::int64_t num_deep = space.size();
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * num_deep;

  DssSolution sol;
  sol.strategy = EmptyStrategy(spec, EquilibriumStrategy::Mode::kStationary, 1, num_deep);
  sol.values.num_states = spec.num_states();
  sol.values.num_deep = num_deep;

  PmfCache cache(options.cache_budget);
  PmfCache* cache_ptr = options.use_cache ? &cache : nullptr;
  const double stop = options.vi_tolerance * (1.0 - beta) / (2.0 * beta);
  std::vector<double> current(slice_size, 0.0);
  std::vector<double> next;
  sol.report.vi_converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const double diff = Sweep(spec, space, current, next, nullptr, nullptr, nullptr,
                              cache_ptr, options);
    sol.report.sweep_differences.push_back(diff);
    current.swap(next);
    if (diff <= stop) {
      sol.report.vi_converged = true;
      break;
    }
  }
  // Verification sweep: the reported strategy is the equilibrium of every
  // node against the final iterate, and the reported values are its values.
  const double residual =
      Sweep(spec, space, current, next, &sol.strategy.laws[0], &sol.report.entries,
            options.check_multiplicity ? &sol.report.multiple_equilibria_nodes : nullptr,
            cache_ptr, options);
  sol.report.bellman_residual = residual;
  sol.values.slices = {std::move(next)};
  return sol;
}

std::vector<std::vector<double>> ValueIterationSweeps(const GameSpec& spec, int sweeps,
                                                      const DssOptions& options) {
  RequireHorizon(spec, false);
  DeepStateSpace space(spec.n, spec.num_states(), options.support_cap);
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * space.size();
  PmfCache cache(options.cache_budget);
  PmfCache* cache_ptr = options.use_cache ? &cache : nullptr;
  std::vector<std::vector<double>> out{std::vector<double>(slice_size, 0.0)};
  for (int k = 0; k < sweeps; ++k) {
    std::vector<double> next;
    Sweep(spec, space, out.back(), next, nullptr, nullptr, nullptr, cache_ptr, options);
    out.push_back(std::move(next));
  }
  return out;
}

// ------------------------------------------------------------ audit

namespace {

// Everything the deviator's dynamic program needs at one (slice, d, x) once
// the population law is frozen.
struct FrozenState {
  std::vector<double> stage;       // weighted stage cost per action
  std::vector<double> transition;  // [u * nx + y]
  PmfCache::Value pmf;             // others' next counts
};

struct FrozenNode {
  std::vector<FrozenState> states;  // indexed by x, empty for inactive
};

std::vector<FrozenNode> Freeze(const GameSpec& spec, const DeepStateSpace& space, int t,
                               const std::vector<LocalLaw>& laws, bool with_next,
                               const DssOptions& options) {
  const std::int64_t num_deep = space.size();
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  const double weight = spec.horizon.StageWeight(t);
  std::vector<FrozenNode> nodes(num_deep);
  ForEachIndex(num_deep, options.execution, [&](std::int64_t r) {
    const DeepState d{space.State(r)};
    const std::vector<double> dist = d.Probabilities();
    const LocalLaw& law = laws[r];
    nodes[r].states.resize(nx);
    std::vector<double> own(nu);
    for (int x = 0; x < nx; ++x) {
      if (d.counts[x] == 0) continue;
      FrozenState& fs = nodes[r].states[x];
      fs.stage.resize(nu);
      fs.transition.resize(static_cast<std::size_t>(nu) * nx);
      for (int u = 0; u < nu; ++u) {
        std::fill(own.begin(), own.end(), 0.0);
        own[u] = 1.0;
        fs.stage[u] = weight * ExpectedStageCost(spec, t, x, d, own, law, options.support_cap);
        for (int y = 0; y < nx; ++y) {
          fs.transition[static_cast<std::size_t>(u) * nx + y] = spec.kernel.Eval(t, y, x, u, dist);
        }
      }
      if (with_next) {
        fs.pmf = std::make_shared<const std::vector<double>>(JointNextDeepPmfDense(
            spec.kernel, t, x, OthersFromFull(d, x), law, options.support_cap));
      }
    }
  });
  return nodes;
}

// Applies one step of the on-path and best-deviation recursions.
void Backup(const GameSpec& spec, const DeepStateSpace& space,
            const std::vector<FrozenNode>& nodes, const std::vector<LocalLaw>& laws,
            const std::vector<double>& next_on, const std::vector<double>& next_dev,
            double continuation, std::vector<double>& on, std::vector<double>& dev,
            const DssOptions& options) {
  const std::int64_t num_deep = space.size();
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  on.assign(static_cast<std::size_t>(nx) * num_deep, 0.0);
  dev.assign(on.size(), 0.0);
  ForEachIndex(num_deep, options.execution, [&](std::int64_t r) {
    std::vector<double> carry_on(nx, 0.0), carry_dev(nx, 0.0);
    for (int x = 0; x < nx; ++x) {
      const FrozenState& fs = nodes[r].states[x];
      if (fs.stage.empty()) continue;
      if (fs.pmf) {
        for (int y = 0; y < nx; ++y) {
          double a = 0.0, b = 0.0;
          for (std::size_t o = 0; o < fs.pmf->size(); ++o) {
            const double p = (*fs.pmf)[o];
            if (p == 0.0) continue;
            const std::size_t at =
                static_cast<std::size_t>(y) * num_deep + space.Lift(y, static_cast<std::int64_t>(o));
            a += p * next_on[at];
            b += p * next_dev[at];
          }
          carry_on[y] = a;
          carry_dev[y] = b;
        }
      }
      double v_on = 0.0;
      double v_dev = std::numeric_limits<double>::infinity();
      for (int u = 0; u < nu; ++u) {
        double c_on = 0.0, c_dev = 0.0;
        for (int y = 0; y < nx; ++y) {
          const double p = fs.transition[static_cast<std::size_t>(u) * nx + y];
          c_on += p * carry_on[y];
          c_dev += p * carry_dev[y];
        }
        v_on += laws[r](x, u) * (fs.stage[u] + continuation * c_on);
        v_dev = std::min(v_dev, fs.stage[u] + continuation * c_dev);
      }
      const std::size_t at = static_cast<std::size_t>(x) * num_deep + r;
      on[at] = v_on;
      dev[at] = v_dev;
    }
  });
}

void TrackGap(const DeepStateSpace& space, int t, const std::vector<double>& on,
              const std::vector<double>& dev, AuditResult& result) {
  const std::int64_t num_deep = space.size();
  for (std::size_t i = 0; i < on.size(); ++i) {
    const std::int64_t r = static_cast<std::int64_t>(i % num_deep);
    const int x = static_cast<int>(i / num_deep);
    if (space.State(r)[x] == 0) continue;
    const double gap = on[i] - dev[i];
    if (gap > result.max_gap || result.d.empty()) {
      result.max_gap = gap;
      result.t = t;
      result.x = x;
      result.d = space.State(r);
    }
  }
}

}  // namespace

AuditResult ExploitabilityAudit(const GameSpec& spec, const EquilibriumStrategy& strategy,
                                const DssOptions& options) {
  DeepStateSpace space(spec.n, spec.num_states(), options.support_cap);
  const std::size_t slice_size = static_cast<std::size_t>(spec.num_states()) * space.size();
  if (strategy.n != spec.n || strategy.num_states != spec.num_states() ||
      strategy.num_actions != spec.num_actions()) {
    throw Error(ErrorCode::kStrategyGap, "strategy shape does not match the model");
  }
  AuditResult result;
  if (spec.horizon.finite()) {
    const int horizon = spec.horizon.stages;
    if (strategy.mode != EquilibriumStrategy::Mode::kFinite || strategy.stages < horizon) {
      throw Error(ErrorCode::kStrategyGap, "strategy does not cover every stage");
    }
    std::vector<double> next_on(slice_size, 0.0), next_dev(slice_size, 0.0), on, dev;
    for (int t = horizon; t >= 1; --t) {
      const auto nodes = Freeze(spec, space, t, strategy.laws[t - 1], t < horizon, options);
      Backup(spec, space, nodes, strategy.laws[t - 1], next_on, next_dev, 1.0, on, dev, options);
      TrackGap(space, t, on, dev, result);
      next_on.swap(on);
      next_dev.swap(dev);
    }
    return result;
  }
  if (strategy.mode != EquilibriumStrategy::Mode::kStationary) {
    throw Error(ErrorCode::kStrategyGap, "discounted audit needs a stationary strategy");
  }
  const double beta = spec.horizon.beta;
  const auto nodes = Freeze(spec, space, 1, strategy.laws[0], true, options);
  std::vector<double> cur_on(slice_size, 0.0), cur_dev(slice_size, 0.0), on, dev;
  for (int k = 0; k < 100000; ++k) {
    Backup(spec, space, nodes, strategy.laws[0], cur_on, cur_dev, beta, on, dev, options);
    double diff = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < on.size(); ++i) {
      diff = std::max({diff, std::abs(on[i] - cur_on[i]), std::abs(dev[i] - cur_dev[i])});
      scale = std::max(scale, std::abs(on[i]));
    }
    cur_on.swap(on);
    cur_dev.swap(dev);
    if (diff * beta / (1.0 - beta) <= 1e-13 * scale) break;
  }
  TrackGap(space, 1, cur_on, cur_dev, result);
  return result;
}

double ExpectedInitialValue(const GameSpec& spec, const DeepStateSpace& space,
                            std::span<const double> first_slice) {
  const int nx = spec.num_states();
  const auto& p = spec.initial_dist;
  const CompositionIndex& others = space.others_index();
  const int m = space.n() - 1;
  double total = 0.0;
  for (std::int64_t r = 0; r < others.size(); ++r) {
    const Counts c = others.Unrank(r);
    double log_mass = std::lgamma(m + 1.0);
    bool zero = false;
    for (int y = 0; y < nx; ++y) {
      log_mass -= std::lgamma(c[y] + 1.0);
      if (c[y] > 0) {
        if (p[y] <= 0.0) {
          zero = true;
          break;
        }
        log_mass += c[y] * std::log(p[y]);
      }
    }
    if (zero) continue;
    const double mass = std::exp(log_mass);
    for (int x = 0; x < nx; ++x) {
      if (p[x] <= 0.0) continue;
      total += p[x] * mass *
               first_slice[static_cast<std::size_t>(x) * space.size() + space.Lift(x, r)];
    }
  }
  return total;
}

}  // namespace popgame
