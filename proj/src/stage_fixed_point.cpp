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

#include "popgame/stage_fixed_point.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace popgame {

double Exploitability(const StageGame& game, const LocalLaw& law,
                      const std::vector<double>& q) {
  const int nu = game.num_actions();
  double worst = 0.0;
  for (int x : game.active_states()) {
    const double* row = q.data() + static_cast<std::size_t>(x) * nu;
    double on_path = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int u = 0; u < nu; ++u) {
      on_path += law(x, u) * row[u];
      best = std::min(best, row[u]);
    }
    worst = std::max(worst, on_path - best);
  }
  return worst;
}

LocalLaw PureBestResponse(const StageGame& game, const std::vector<double>& q,
                          double tie_tolerance) {
  const int nu = game.num_actions();
  LocalLaw br(game.num_states(), nu);
  for (int x : game.active_states()) {
    const double* row = q.data() + static_cast<std::size_t>(x) * nu;
    const double best = *std::min_element(row, row + nu);
    const double slack = tie_tolerance * std::max(1.0, std::abs(best));
    int choice = 0;
    while (row[choice] > best + slack) ++choice;
    auto out = br.MutableRow(x);
    std::fill(out.begin(), out.end(), 0.0);
    out[choice] = 1.0;
  }
  return br;
}

namespace {

struct Candidate {
  LocalLaw law;
  std::vector<double> q;
  double residual = std::numeric_limits<double>::infinity();
};

void Consider(const StageGame& game, LocalLaw law, Candidate& best,
              std::vector<double>& scratch) {
  game.ActionValues(law, scratch);
  const double res = Exploitability(game, law, scratch);
  if (res < best.residual) {
    best.law = std::move(law);
    best.q = scratch;
    best.residual = res;
  }
}

// Solves the indifference equations q(x,a) = q(x,b) for all a, b in the
// support of `start`'s rows (entries >= threshold), by damped Newton with a
// finite-difference Jacobian. The outcome is offered to `best`.
void PolishSupport(const StageGame& game, const LocalLaw& start, double threshold,
                   Candidate& best, std::vector<double>& scratch) {
  const int nu = game.num_actions();
  struct Row {
    int x;
    std::vector<int> support;
    int first_var;
  };
  std::vector<Row> rows;
  int num_vars = 0;
  for (int x : game.active_states()) {
    Row r{x, {}, num_vars};
    for (int u = 0; u < nu; ++u) {
      if (start(x, u) >= threshold) r.support.push_back(u);
    }
    if (r.support.empty()) {
      r.support.push_back(static_cast<int>(
          std::max_element(start.Row(x).begin(), start.Row(x).end()) - start.Row(x).begin()));
    }
    num_vars += static_cast<int>(r.support.size()) - 1;
    rows.push_back(std::move(r));
  }

  Eigen::VectorXd z(num_vars);
  for (const Row& r : rows) {
    double mass = 0.0;
    for (int u : r.support) mass += start(r.x, u);
    for (std::size_t j = 0; j + 1 < r.support.size(); ++j) {
      z[r.first_var + static_cast<int>(j)] = start(r.x, r.support[j]) / mass;
    }
  }

  auto build = [&](const Eigen::VectorXd& v) {
    LocalLaw law(game.num_states(), nu);
    for (const Row& r : rows) {
      auto out = law.MutableRow(r.x);
      std::fill(out.begin(), out.end(), 0.0);
      double rest = 1.0;
      for (std::size_t j = 0; j + 1 < r.support.size(); ++j) {
        const double p = v[r.first_var + static_cast<int>(j)];
        out[r.support[j]] = p;
        rest -= p;
      }
      out[r.support.back()] = std::max(rest, 0.0);
    }
    return law;
  };
  auto residuals = [&](const Eigen::VectorXd& v, Eigen::VectorXd& f) {
    game.ActionValues(build(v), scratch);
    f.resize(num_vars);
    for (const Row& r : rows) {
      const double* qrow = scratch.data() + static_cast<std::size_t>(r.x) * nu;
      for (std::size_t j = 0; j + 1 < r.support.size(); ++j) {
        f[r.first_var + static_cast<int>(j)] = qrow[r.support[j]] - qrow[r.support.back()];
      }
    }
  };
  // Keeps each row's free coordinates nonnegative with sum at most one.
  auto project = [&](Eigen::VectorXd& v) {
    for (const Row& r : rows) {
      double sum = 0.0;
      for (std::size_t j = 0; j + 1 < r.support.size(); ++j) {
        double& p = v[r.first_var + static_cast<int>(j)];
        p = std::max(p, 0.0);
        sum += p;
      }
      if (sum > 1.0) {
        for (std::size_t j = 0; j + 1 < r.support.size(); ++j) {
          v[r.first_var + static_cast<int>(j)] /= sum;
        }
      }
    }
  };

  if (num_vars > 0) {
    Eigen::VectorXd f, f_trial, f_step;
    residuals(z, f);
    for (int it = 0; it < 40; ++it) {
      const double norm = f.lpNorm<Eigen::Infinity>();
      if (norm < 1e-15) break;
      Eigen::MatrixXd jac(num_vars, num_vars);
      for (int j = 0; j < num_vars; ++j) {
        const double h = z[j] + 1e-7 <= 1.0 ? 1e-7 : -1e-7;
        Eigen::VectorXd zh = z;
        zh[j] += h;
        residuals(zh, f_step);
        jac.col(j) = (f_step - f) / h;
      }
      const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-f);
      if (!step.allFinite()) break;
      bool improved = false;
      for (double alpha = 1.0; alpha >= 1.0 / 64; alpha *= 0.5) {
        Eigen::VectorXd trial = z + alpha * step;
        project(trial);
        residuals(trial, f_trial);
        if (f_trial.lpNorm<Eigen::Infinity>() < norm) {
          z = trial;
          f = f_trial;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
  }
  Consider(game, build(z), best, scratch);
}

bool OnPolishSchedule(int k) {
  for (int s = 4; s <= (1 << 30) / 4; s *= 4) {
    if (k == s) return true;
    if (s > k) break;
  }
  return false;
}

}  // namespace

FixedPointResult SolveStageFixedPoint(const StageGame& game,
                                      const FixedPointOptions& options) {
  const int nx = game.num_states();
  const int nu = game.num_actions();
  LocalLaw iterate = options.initial ? *options.initial : LocalLaw(nx, nu);
  // Inactive rows stay uniform.
  {
    std::vector<bool> active(nx, false);
    for (int x : game.active_states()) active[x] = true;
    for (int x = 0; x < nx; ++x) {
      if (!active[x]) {
        auto row = iterate.MutableRow(x);
        std::fill(row.begin(), row.end(), 1.0 / nu);
      }
    }
  }

  Candidate best;
  std::vector<double> q;
  std::vector<double> scratch;
  FixedPointResult result;
  int k = 0;
  for (; k < std::max(options.max_iters, 1); ++k) {
    game.ActionValues(iterate, q);
    const double res = Exploitability(game, iterate, q);
    if (res < best.residual) {
      best.law = iterate;
      best.q = q;
      best.residual = res;
    }
    if (best.residual <= options.tolerance) break;

    LocalLaw br = PureBestResponse(game, q, options.tie_tolerance);
    Consider(game, br, best, scratch);
    if (best.residual <= options.tolerance) break;

    if (options.polish && OnPolishSchedule(k)) {
      PolishSupport(game, iterate, 0.05, best, scratch);
      if (best.residual > options.tolerance) PolishSupport(game, iterate, 0.005, best, scratch);
      if (best.residual <= options.tolerance) break;
    }

    const double step = 1.0 / (k + 2);
    for (int x : game.active_states()) {
      auto row = iterate.MutableRow(x);
      for (int u = 0; u < nu; ++u) row[u] += step * (br(x, u) - row[u]);
    }
  }
  if (options.polish) {
    // Mixed laws accepted at the tolerance are driven down to rounding level
    // so that node values carry no solver noise into later sweeps.
    double scale = 1.0;
    for (double v : best.q) scale = std::max(scale, std::abs(v));
    for (double threshold : {0.05, 0.005, 1e-4}) {
      if (best.residual <= 1e-14 * scale) break;
      PolishSupport(game, best.law, threshold, best, scratch);
    }
  }

  result.law = std::move(best.law);
  result.q = std::move(best.q);
  result.residual = std::max(best.residual, 0.0);
  result.iterations = std::min(k + 1, std::max(options.max_iters, 1));
  result.converged = result.residual <= options.tolerance;
  return result;
}

}  // namespace popgame
