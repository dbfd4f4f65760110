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

// Player-by-player enumeration oracles. Nothing in here goes through the
// composition ranks or the binomial/multinomial convolutions of the library.

#ifndef POPGAME_TESTS_BRUTE_FORCE_HPP_
#define POPGAME_TESTS_BRUTE_FORCE_HPP_

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <tuple>
#include <vector>

#include "popgame/deep_dynamics.hpp"
#include "popgame/dss_solver.hpp"
#include "popgame/game_model.hpp"

namespace popgame::testing {

inline std::vector<int> Players(const Counts& counts) {
  std::vector<int> p;
  for (int x = 0; x < static_cast<int>(counts.size()); ++x) {
    for (int k = 0; k < counts[x]; ++k) p.push_back(x);
  }
  return p;
}

inline std::vector<double> Normalized(const Counts& c, int n) {
  std::vector<double> v(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) v[i] = static_cast<double>(c[i]) / n;
  return v;
}

inline std::vector<Counts> AllCompositions(int total, int parts) {
  std::vector<Counts> out;
  Counts cur(parts, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == parts - 1) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[i] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, total);
  return out;
}

// Law of the others' next counts, one player at a time.
inline std::map<Counts, double> BruteNextOthers(const TransitionKernel& kernel, int t,
                                                int deviator_x, const Counts& others,
                                                const LocalLaw& law) {
  const int nx = kernel.num_states();
  Counts full = others;
  ++full[deviator_x];
  int n = 0;
  for (int c : full) n += c;
  const auto d = Normalized(full, n);
  const auto players = Players(others);
  std::map<Counts, double> out;
  Counts next(nx, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
    if (p == 0.0) return;
    if (i == players.size()) {
      out[next] += p;
      return;
    }
    const int x = players[i];
    for (int y = 0; y < nx; ++y) {
      double ty = 0.0;
      for (int u = 0; u < kernel.num_actions(); ++u) {
        ty += law(x, u) * kernel.Eval(t, y, x, u, d);
      }
      ++next[y];
      rec(i + 1, p * ty);
      --next[y];
    }
  };
  rec(0, 1.0);
  return out;
}

// Law of the others' joint state-action counts, flattened [x][u].
inline std::map<Counts, double> BruteJointAction(const Counts& others, const LocalLaw& law,
                                                 int num_actions) {
  const auto players = Players(others);
  const int nx = static_cast<int>(others.size());
  std::map<Counts, double> out;
  Counts joint(static_cast<std::size_t>(nx) * num_actions, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
    if (p == 0.0) return;
    if (i == players.size()) {
      out[joint] += p;
      return;
    }
    const int x = players[i];
    for (int u = 0; u < num_actions; ++u) {
      ++joint[x * num_actions + u];
      rec(i + 1, p * law(x, u));
      --joint[x * num_actions + u];
    }
  };
  rec(0, 1.0);
  return out;
}

inline double BruteExpectedStageCost(const GameSpec& spec, int t, int x, const Counts& d,
                                     const std::vector<double>& own_row,
                                     const LocalLaw& others_law) {
  Counts others = d;
  --others[x];
  const int nu = spec.num_actions();
  int n = 0;
  for (int c : d) n += c;
  double total = 0.0;
  for (const auto& [joint, p] : BruteJointAction(others, others_law, nu)) {
    for (int u = 0; u < nu; ++u) {
      if (own_row[u] == 0.0) continue;
      Counts j = joint;
      ++j[x * nu + u];
      total += p * own_row[u] * spec.cost.Eval(t, x, u, Normalized(j, n));
    }
  }
  return total;
}

// Deviator's mixed action at (t, x, d); d counts the deviator.
using RowFn = std::function<std::vector<double>(int t, int x, const Counts& d)>;

// Finite-horizon cost of one player following `dev` while the other players
// (listed individually) follow `eq`. Every player's action and transition is
// enumerated separately.
class GameTree {
 public:
  GameTree(const GameSpec& spec, const EquilibriumStrategy& eq)
      : spec_(spec), eq_(eq), nx_(spec.num_states()), nu_(spec.num_actions()) {}

  double Cost(const RowFn& dev, int t, int x, std::vector<int> others) {
    memo_.clear();
    std::sort(others.begin(), others.end());
    return Eval(dev, t, x, others);
  }

 private:
  double Eval(const RowFn& dev, int t, int x, const std::vector<int>& others) {
    if (t > spec_.horizon.stages) return 0.0;
    auto key = std::make_tuple(t, x, others);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    Counts d(nx_, 0);
    for (int o : others) ++d[o];
    ++d[x];
    const int n = static_cast<int>(others.size()) + 1;
    const auto dn = Normalized(d, n);
    const LocalLaw& law = eq_.At(t, d);
    const auto row = dev(t, x, d);
    const double w = spec_.horizon.StageWeight(t);

    double total = 0.0;
    std::vector<int> acts(others.size()), next(others.size());
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
      if (p == 0.0) return;
      if (i == others.size()) {
        Counts joint(static_cast<std::size_t>(nx_) * nu_, 0);
        for (std::size_t j = 0; j < others.size(); ++j) ++joint[others[j] * nu_ + acts[j]];
        std::vector<int> sorted = next;
        std::sort(sorted.begin(), sorted.end());
        for (int u = 0; u < nu_; ++u) {
          if (row[u] == 0.0) continue;
          Counts jj = joint;
          ++jj[x * nu_ + u];
          double v = w * spec_.cost.Eval(t, x, u, Normalized(jj, n));
          for (int y = 0; y < nx_; ++y) {
            const double ty = spec_.kernel.Eval(t, y, x, u, dn);
            if (ty != 0.0) v += ty * Eval(dev, t + 1, y, sorted);
          }
          total += p * row[u] * v;
        }
        return;
      }
      const int xo = others[i];
      for (int u = 0; u < nu_; ++u) {
        const double pu = law(xo, u);
        if (pu == 0.0) continue;
        acts[i] = u;
        for (int y = 0; y < nx_; ++y) {
          next[i] = y;
          rec(i + 1, p * pu * spec_.kernel.Eval(t, y, xo, u, dn));
        }
      }
    };
    rec(0, 1.0);
    memo_[key] = total;
    return total;
  }

  const GameSpec& spec_;
  const EquilibriumStrategy& eq_;
  int nx_, nu_;
  std::map<std::tuple<int, int, std::vector<int>>, double> memo_;
};

struct DecisionPoint {
  int t;
  int x;
  Counts d;
};

inline std::vector<DecisionPoint> DecisionPoints(const GameSpec& spec) {
  std::vector<DecisionPoint> pts;
  for (int t = 1; t <= spec.horizon.stages; ++t) {
    for (const auto& d : AllCompositions(spec.n, spec.num_states())) {
      for (int x = 0; x < spec.num_states(); ++x) {
        if (d[x] > 0) pts.push_back({t, x, d});
      }
    }
  }
  return pts;
}

inline RowFn OnPath(const EquilibriumStrategy& eq) {
  return [&eq](int t, int x, const Counts& d) {
    auto r = eq.At(t, d).Row(x);
    return std::vector<double>(r.begin(), r.end());
  };
}

// Minimum cost over every pure Markov deviation (t, x, d) -> u, for each
// starting point in `starts`. Returns one value per start.
struct Start {
  int t;
  int x;
  std::vector<int> others;
};

inline std::vector<double> BestPureDeviation(const GameSpec& spec,
                                             const EquilibriumStrategy& eq,
                                             const std::vector<Start>& starts) {
  const auto pts = DecisionPoints(spec);
  std::map<std::tuple<int, int, Counts>, std::size_t> where;
  for (std::size_t i = 0; i < pts.size(); ++i) where[{pts[i].t, pts[i].x, pts[i].d}] = i;
  const int nu = spec.num_actions();
  std::vector<int> choice(pts.size(), 0);
  RowFn dev = [&](int t, int x, const Counts& d) {
    std::vector<double> row(nu, 0.0);
    row[choice[where.at({t, x, d})]] = 1.0;
    return row;
  };
  GameTree tree(spec, eq);
  std::vector<double> best(starts.size(), std::numeric_limits<double>::infinity());
  while (true) {
    for (std::size_t s = 0; s < starts.size(); ++s) {
      best[s] = std::min(best[s], tree.Cost(dev, starts[s].t, starts[s].x, starts[s].others));
    }
    std::size_t i = 0;
    while (i < choice.size() && ++choice[i] == nu) choice[i++] = 0;
    if (i == choice.size()) break;
  }
  return best;
}

// Every (t, x, others) with the others in sorted order.
inline std::vector<Start> AllStarts(const GameSpec& spec) {
  std::vector<Start> out;
  for (const auto& p : DecisionPoints(spec)) {
    Counts o = p.d;
    --o[p.x];
    out.push_back({p.t, p.x, Players(o)});
  }
  return out;
}

// E V_1(x_1, d_1) with every player's initial state drawn independently.
inline double BruteInitialValue(const GameSpec& spec,
                                const std::function<double(int, const Counts&)>& v1) {
  const int n = spec.n, nx = spec.num_states();
  std::vector<int> s(n, 0);
  double total = 0.0;
  while (true) {
    double p = 1.0;
    Counts d(nx, 0);
    for (int i = 0; i < n; ++i) {
      p *= spec.initial_dist[s[i]];
      ++d[s[i]];
    }
    if (p > 0.0) total += p * v1(s[0], d);
    int i = 0;
    while (i < n && ++s[i] == nx) s[i++] = 0;
    if (i == n) break;
  }
  return total;
}

}  // namespace popgame::testing

#endif  // POPGAME_TESTS_BRUTE_FORCE_HPP_
