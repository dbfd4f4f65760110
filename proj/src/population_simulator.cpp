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

#include "popgame/population_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "popgame/error.hpp"
#include "popgame/rng.hpp"

namespace popgame {
namespace {

// Replications are summed in fixed-size blocks so totals do not depend on
// the thread count.
constexpr std::int64_t kBlock = 1024;

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void Add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::string CountsText(std::span<const int> counts) {
  std::string s = "(";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(counts[i]);
  }
  return s + ")";
}

double StageWeightFor(const Horizon& h, int t) {
  if (h.finite()) return h.StageWeight(t);
  return std::pow(h.beta, t - 1);
}

}  // namespace

PopulationState PopulationState::FromStates(std::vector<int> states, int num_states) {
  PopulationState p;
  p.counts.assign(num_states, 0);
  for (int x : states) ++p.counts[x];
  p.states = std::move(states);
  return p;
}

bool PopulationState::Consistent() const {
  Counts recount(counts.size(), 0);
  for (int x : states) {
    if (x < 0 || x >= static_cast<int>(counts.size())) return false;
    ++recount[x];
  }
  return recount == counts;
}

const LocalLaw& DssPolicy::Law(int t, std::span<const int> counts) const {
  try {
    return strategy_.At(t, counts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kStrategyGap) throw;
    throw Error(ErrorCode::kStrategyGap, "strategy gap at stage " + std::to_string(t) +
                                             ", deep state " + CountsText(counts) + ": " +
                                             e.what());
  }
}

const LocalLaw& NsPolicy::Law(int t, std::span<const int>) const { return strategy_.At(t); }

SimulationResult Simulate(const GameSpec& spec, const SimulationPolicy& policy,
                          const SimulationOptions& options) {
  if (options.replications < 1) {
    throw Error(ErrorCode::kInvalidArgument, "replications must be >= 1");
  }
  if (options.stages < 1) throw Error(ErrorCode::kInvalidArgument, "stages must be >= 1");
  const int n = spec.n;
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  std::vector<int> stream(n);
  std::iota(stream.begin(), stream.end(), 0);
  if (!options.stream_of_player.empty()) {
    if (static_cast<int>(options.stream_of_player.size()) != n) {
      throw Error(ErrorCode::kInvalidArgument, "stream permutation has the wrong length");
    }
    stream = options.stream_of_player;
  }
  for (const auto& dist : options.initial_dists) {
    if (static_cast<int>(dist.size()) != nx) {
      throw Error(ErrorCode::kInvalidArgument, "initial distribution has the wrong length");
    }
  }
  const CounterRng rng(options.seed);
  const std::int64_t reps = options.replications;
  const int stages = options.stages;

  SimulationResult result;
  result.replications = reps;
  result.stages = stages;
  result.n = n;
  result.seed = options.seed;
  result.replication_cost.assign(reps, 0.0);
  if (options.store_paths) {
    result.paths.assign(reps, {});
    result.player_costs.assign(reps, {});
  }
  const std::int64_t blocks = (reps + kBlock - 1) / kBlock;
  std::vector<std::vector<Kahan>> block_player(blocks, std::vector<Kahan>(n));

  ForEachIndex(blocks, options.execution, [&](std::int64_t b) {
    std::vector<int> x(n), u(n);
    std::vector<double> cost(n);
    Counts counts(nx), joint_counts(static_cast<std::size_t>(nx) * nu);
    std::vector<double> dist(nx), joint(joint_counts.size());
    std::vector<double> stage_cost(joint_counts.size());
    std::vector<double> rows(static_cast<std::size_t>(nx) * nu * nx);
    const std::int64_t end = std::min(reps, (b + 1) * kBlock);
    for (std::int64_t r = b * kBlock; r < end; ++r) {
      const std::vector<double>& init =
          options.initial_dists.empty()
              ? spec.initial_dist
              : options.initial_dists[r % options.initial_dists.size()];
      for (int i = 0; i < n; ++i) {
        x[i] = SampleIndex(init, rng.Uniform(r, stream[i], 0, DrawKind::kInit));
      }
      std::fill(cost.begin(), cost.end(), 0.0);
      std::vector<Counts> path;
      for (int t = 1; t <= stages; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) ++counts[x[i]];
        if (options.store_paths) path.push_back(counts);
        const LocalLaw& law = policy.Law(t, counts);
        std::fill(joint_counts.begin(), joint_counts.end(), 0);
        for (int i = 0; i < n; ++i) {
          const int forced = policy.ForcedAction(i, t, x[i]);
          u[i] = forced >= 0 ? forced
                             : SampleIndex(law.Row(x[i]),
                                           rng.Uniform(r, stream[i], t, DrawKind::kAction));
          ++joint_counts[static_cast<std::size_t>(x[i]) * nu + u[i]];
        }
        for (int y = 0; y < nx; ++y) dist[y] = static_cast<double>(counts[y]) / n;
        for (std::size_t k = 0; k < joint.size(); ++k) {
          joint[k] = static_cast<double>(joint_counts[k]) / n;
        }
        const double weight = StageWeightFor(spec.horizon, t);
        for (int a = 0; a < nx; ++a) {
          for (int c = 0; c < nu; ++c) {
            const std::size_t k = static_cast<std::size_t>(a) * nu + c;
            if (joint_counts[k] == 0) continue;
            stage_cost[k] = weight * spec.cost.Eval(t, a, c, joint);
            for (int y = 0; y < nx; ++y) rows[k * nx + y] = spec.kernel.Eval(t, y, a, c, dist);
          }
        }
        for (int i = 0; i < n; ++i) {
          const std::size_t k = static_cast<std::size_t>(x[i]) * nu + u[i];
          cost[i] += stage_cost[k];
          x[i] = SampleIndex(std::span<const double>(rows.data() + k * nx, nx),
                             rng.Uniform(r, stream[i], t, DrawKind::kTransition));
        }
      }
      Kahan rep;
      for (int i = 0; i < n; ++i) {
        rep.Add(cost[i]);
        block_player[b][i].Add(cost[i]);
      }
      result.replication_cost[r] = rep.sum / n;
      if (options.store_paths) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) ++counts[x[i]];
        path.push_back(counts);
        result.paths[r] = std::move(path);
        result.player_costs[r] = cost;
      }
    }
  });

  Kahan total;
  for (double v : result.replication_cost) total.Add(v);
  result.mean_cost = total.sum / reps;
  Kahan sq;
  for (double v : result.replication_cost) sq.Add((v - result.mean_cost) * (v - result.mean_cost));
  const double variance = reps > 1 ? sq.sum / (reps - 1) : 0.0;
  result.standard_error = std::sqrt(variance / reps);
  result.player_mean_cost.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Kahan acc;
    for (std::int64_t b = 0; b < blocks; ++b) acc.Add(block_player[b][i].sum);
    result.player_mean_cost[i] = acc.sum / reps;
  }
  return result;
}

PermutationOutcome PermutationCheck(const GameSpec& spec, const SimulationPolicy& policy,
                                    int stages, std::int64_t replications, std::uint64_t seed,
                                    bool identity) {
  const int n = spec.n;
  PermutationOutcome out;
  out.permutation.resize(n);
  std::iota(out.permutation.begin(), out.permutation.end(), 0);
  if (!identity && n > 1) {
    // Redraw until no player keeps its own stream.
    std::mt19937_64 gen(seed);
    auto fixed = [&] {
      for (int i = 0; i < n; ++i) {
        if (out.permutation[i] == i) return true;
      }
      return false;
    };
    do {
      std::shuffle(out.permutation.begin(), out.permutation.end(), gen);
    } while (fixed());
  }
  SimulationOptions opts;
  opts.stages = stages;
  opts.replications = replications;
  opts.seed = seed;
  opts.store_paths = true;
  const SimulationResult a = Simulate(spec, policy, opts);
  opts.stream_of_player = out.permutation;
  const SimulationResult b = Simulate(spec, policy, opts);
  out.paths_equal = a.paths == b.paths;
  out.costs_equal = true;
  for (std::int64_t r = 0; r < replications && out.costs_equal; ++r) {
    for (int i = 0; i < n; ++i) {
      if (b.player_costs[r][i] != a.player_costs[r][out.permutation[i]]) {
        out.costs_equal = false;
        break;
      }
    }
  }
  out.pass = out.paths_equal && out.costs_equal;
  return out;
}

GoodnessOfFit ChiSquareTest(const std::vector<std::int64_t>& observed,
                            const std::vector<double>& probs, double significance) {
  std::int64_t total = 0;
  for (auto c : observed) total += c;
  GoodnessOfFit g;
  double pooled_expected = 0.0;
  std::int64_t pooled_observed = 0;
  std::vector<std::pair<double, std::int64_t>> bins;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * total;
    if (e < 5.0) {
      pooled_expected += e;
      pooled_observed += observed[i];
    } else {
      bins.emplace_back(e, observed[i]);
    }
  }
  if (pooled_expected > 0.0 || pooled_observed > 0) {
    if (pooled_expected >= 5.0 || bins.empty()) {
      bins.emplace_back(pooled_expected, pooled_observed);
    } else {
      // Too thin to stand alone: fold into the smallest regular bin.
      auto it = std::min_element(bins.begin(), bins.end());
      it->first += pooled_expected;
      it->second += pooled_observed;
    }
  }
  g.bins = static_cast<int>(bins.size());
  for (const auto& [e, o] : bins) {
    if (e > 0.0) {
      g.statistic += (o - e) * (o - e) / e;
    } else if (o > 0) {
      g.statistic = std::numeric_limits<double>::infinity();
    }
  }
  g.degrees_of_freedom = std::max(g.bins - 1, 0);
  if (g.degrees_of_freedom == 0) {
    g.p_value = std::isfinite(g.statistic) ? 1.0 : 0.0;
  } else if (!std::isfinite(g.statistic)) {
    g.p_value = 0.0;
  } else {
    boost::math::chi_squared_distribution<double> dist(g.degrees_of_freedom);
    g.p_value = boost::math::cdf(boost::math::complement(dist, g.statistic));
  }
  g.pass = g.p_value >= significance;
  return g;
}

GoodnessOfFit OneStepHistogramTest(const GameSpec& spec, int t, int deviator_x,
                                   const DeepState& d, const LocalLaw& law,
                                   std::int64_t samples, std::uint64_t seed,
                                   double significance) {
  const OthersDeepState others = OthersFromFull(d, deviator_x);
  const int nx = spec.num_states();
  const std::vector<double> probs =
      JointNextDeepPmfDense(spec.kernel, t, deviator_x, others, law);
  const std::vector<double> dist = d.Probabilities();
  const CompositionIndex index(others.total(), nx);
  std::vector<int> player_state;
  for (int y = 0; y < nx; ++y) player_state.insert(player_state.end(), others.counts[y], y);
  const int nu = spec.num_actions();
  std::vector<double> rows(static_cast<std::size_t>(nx) * nu * nx);
  for (int y = 0; y < nx; ++y) {
    for (int u = 0; u < nu; ++u) {
      for (int z = 0; z < nx; ++z) {
        rows[(static_cast<std::size_t>(y) * nu + u) * nx + z] = spec.kernel.Eval(t, z, y, u, dist);
      }
    }
  }
  const CounterRng rng(seed);
  std::vector<std::int64_t> observed(probs.size(), 0);
  Counts next(nx);
  for (std::int64_t s = 0; s < samples; ++s) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t j = 0; j < player_state.size(); ++j) {
      const int y = player_state[j];
      const int u = SampleIndex(law.Row(y), rng.Uniform(s, j, t, DrawKind::kAction));
      const std::size_t k = static_cast<std::size_t>(y) * nu + u;
      ++next[SampleIndex(std::span<const double>(rows.data() + k * nx, nx),
                         rng.Uniform(s, j, t, DrawKind::kTransition))];
    }
    ++observed[index.Rank(next)];
  }
  return ChiSquareTest(observed, probs, significance);
}

ConvergenceTable ConvergenceExperiment(const std::function<GameSpec(int)>& model,
                                       const std::vector<int>& n_list,
                                       const ConvergenceOptions& options) {
  ConvergenceTable table;
  for (int n : n_list) {
    const GameSpec spec = model(n);
    if (!spec.horizon.finite()) {
      throw Error(ErrorCode::kInvalidArgument, "convergence experiment needs a finite horizon");
    }
    const DssSolution dss = SolveFinite(spec, options.dss);
    const DeepStateSpace space(spec.n, spec.num_states(), options.dss.support_cap);
    ConvergenceRow row;
    row.n = n;
    row.dss_value = ExpectedInitialValue(spec, space, dss.values.slices[0]);
    const int k = options.grid_resolution > 0
                      ? options.grid_resolution
                      : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))) * 10;
    const MeanFieldSolution mf =
        SolveSmfeFinite(spec, BuildGrid(spec.num_states(), k), options.mean_field);
    SimulationOptions sim;
    sim.stages = spec.horizon.stages;
    sim.replications = options.replications;
    sim.seed = options.seed + static_cast<std::uint64_t>(n);
    sim.execution = options.execution;
    const SimulationResult res = Simulate(spec, NsPolicy(mf.ns), sim);
    row.ns_cost = res.mean_cost;
    row.ns_standard_error = res.standard_error;
    row.gap = std::abs(res.mean_cost - row.dss_value);
    table.rows.push_back(row);
  }
  table.non_increasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    const double slack = 2.0 * std::hypot(a.ns_standard_error, b.ns_standard_error);
    if (b.gap > a.gap + slack) table.non_increasing = false;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : table.rows) {
    if (r.gap <= 0.0) continue;
    const double lx = std::log(static_cast<double>(r.n));
    const double ly = std::log(r.gap);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m >= 2) table.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return table;
}

TremblingHandOutcome TremblingHandExperiment(const GameSpec& spec,
                                             const MeanFieldSolution& solution, int t_shock,
                                             const MeanField& m_shock,
                                             const SimulationOptions& options) {
  TremblingHandOutcome out;
  out.shocked = BeliefShock(spec, solution, t_shock, m_shock);
  out.baseline = Simulate(spec, NsPolicy(solution.ns), options);
  out.perturbed = Simulate(spec, NsPolicy(out.shocked), options);
  out.delta = out.perturbed.mean_cost - out.baseline.mean_cost;
  const std::int64_t reps = options.replications;
  Kahan sq;
  for (std::int64_t r = 0; r < reps; ++r) {
    const double diff = out.perturbed.replication_cost[r] - out.baseline.replication_cost[r];
    sq.Add((diff - out.delta) * (diff - out.delta));
  }
  out.delta_standard_error = reps > 1 ? std::sqrt(sq.sum / (reps - 1) / reps) : 0.0;
  return out;
}

double BandContainment(const SimulationResult& result, int state, int lower, int upper,
                       int from_stage) {
  std::int64_t inside = 0;
  std::int64_t total = 0;
  for (const auto& path : result.paths) {
    for (int t = from_stage; t <= result.stages; ++t) {
      const int c = path[t - 1][state];
      inside += (c >= lower && c <= upper) ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / total;
}

}  // namespace popgame
