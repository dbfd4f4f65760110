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

#include "popgame/deep_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <string>

#include "popgame/error.hpp"

namespace popgame {
namespace {

double Clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// log n! via lgamma, memoized for small n.
double LogFactorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(1025);
    for (int i = 0; i < static_cast<int>(t.size()); ++i) t[i] = std::lgamma(i + 1.0);
    return t;
  }();
  if (n < static_cast<int>(table.size())) return table[n];
  return std::lgamma(n + 1.0);
}

// PMF of the multinomial split of `trials` over probs, dense over
// CompositionIndex(trials, probs.size()).
std::vector<double> MultinomialPmf(int trials, std::span<const double> probs,
                                   const std::vector<Counts>& compositions) {
  std::vector<double> out(compositions.size(), 0.0);
  const double log_norm = LogFactorial(trials);
  for (std::size_t r = 0; r < compositions.size(); ++r) {
    const Counts& k = compositions[r];
    double log_p = log_norm;
    bool zero = false;
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (k[i] == 0) continue;
      const double p = Clamp01(probs[i]);
      if (p == 0.0) {
        zero = true;
        break;
      }
      log_p += k[i] * std::log(p) - LogFactorial(k[i]);
    }
    out[r] = zero ? 0.0 : std::exp(log_p);
  }
  return out;
}

std::vector<double> Convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

void CheckCap(std::int64_t size, std::int64_t cap) {
  if (size > cap) {
    throw Error(ErrorCode::kSupportCap,
                "exact kernel too large; reduce n or |X| (support " + std::to_string(size) +
                    " > cap " + std::to_string(cap) + ")");
  }
}

}  // namespace

int DeepState::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

std::vector<double> DeepState::Probabilities() const {
  const double n = total();
  std::vector<double> d(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = counts[i] / n;
  return d;
}

int OthersDeepState::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

std::vector<double> OthersDeepState::Probabilities() const {
  const double n = total();
  std::vector<double> d(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = n > 0 ? counts[i] / n : 0.0;
  return d;
}

double CountDistribution::Mass() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double CountDistribution::ProbabilityOf(const Counts& counts) const {
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] == counts) return probs[i];
  }
  return 0.0;
}

OthersDeepState OthersFromFull(const DeepState& d, int x) {
  if (x < 0 || x >= static_cast<int>(d.counts.size()) || d.counts[x] < 1) {
    throw Error(ErrorCode::kInconsistentState, "deviator state inconsistent with deep state");
  }
  OthersDeepState others{d.counts};
  --others.counts[x];
  return others;
}

std::vector<double> Blend(const OthersDeepState& others, int x) {
  const double n = others.total() + 1;
  std::vector<double> d(others.counts.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = others.counts[i] / n;
  d[x] += 1.0 / n;
  return d;
}

std::vector<double> BinomialPmf(int trials, double p) {
  p = Clamp01(p);
  std::vector<double> pmf(trials + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[trials] = 1.0;
    return pmf;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double ln = LogFactorial(trials);
  for (int k = 0; k <= trials; ++k) {
    pmf[k] = std::exp(ln - LogFactorial(k) - LogFactorial(trials - k) + k * lp +
                      (trials - k) * lq);
  }
  return pmf;
}

std::vector<double> MarginalNextCountPmf(const TransitionKernel& kernel, int t, int y,
                                         int deviator_x, const OthersDeepState& others,
                                         const LocalLaw& law) {
  const int nx = kernel.num_states();
  const std::vector<double> d = Blend(others, deviator_x);
  std::vector<double> row(nx);
  std::vector<double> pmf = {1.0};
  for (int x = 0; x < nx; ++x) {
    if (others.counts[x] == 0) continue;
    kernel.MixedRow(t, x, law.Row(x), d, row);
    pmf = Convolve(pmf, BinomialPmf(others.counts[x], row[y]));
  }
  pmf.resize(others.total() + 1, 0.0);
  return pmf;
}

std::vector<double> JointNextDeepPmfDense(const TransitionKernel& kernel, int t,
                                          int deviator_x, const OthersDeepState& others,
                                          const LocalLaw& law, std::int64_t support_cap) {
  const int nx = kernel.num_states();
  const int m = others.total();
  CheckCap(CompositionCount(m, nx), support_cap);
  const std::vector<double> d = Blend(others, deviator_x);
  std::vector<double> row(nx);

  if (nx == 1) return {1.0};
  if (nx == 2) {
    // Rank of (c0, c1) is c0: convolve binomials on the count landing in
    // state 0.
    std::vector<double> pmf = {1.0};
    for (int x = 0; x < 2; ++x) {
      if (others.counts[x] == 0) continue;
      kernel.MixedRow(t, x, law.Row(x), d, row);
      pmf = Convolve(pmf, BinomialPmf(others.counts[x], row[0]));
    }
    pmf.resize(m + 1, 0.0);
    return pmf;
  }

  // General |X|: fold source groups in one at a time.
  int acc_total = 0;
  std::vector<double> acc = {1.0};
  std::vector<Counts> acc_support = {Counts(nx, 0)};
  for (int x = 0; x < nx; ++x) {
    const int c = others.counts[x];
    if (c == 0) continue;
    kernel.MixedRow(t, x, law.Row(x), d, row);
    const CompositionIndex split_index(c, nx);
    const std::vector<Counts> splits = split_index.Enumerate(support_cap);
    const std::vector<double> split_pmf = MultinomialPmf(c, row, splits);

    const CompositionIndex next_index(acc_total + c, nx);
    std::vector<double> next(static_cast<std::size_t>(next_index.size()), 0.0);
    Counts sum(nx);
    for (std::size_t a = 0; a < acc.size(); ++a) {
      if (acc[a] == 0.0) continue;
      for (std::size_t b = 0; b < splits.size(); ++b) {
        if (split_pmf[b] == 0.0) continue;
        for (int i = 0; i < nx; ++i) sum[i] = acc_support[a][i] + splits[b][i];
        next[static_cast<std::size_t>(next_index.Rank(sum))] += acc[a] * split_pmf[b];
      }
    }
    acc_total += c;
    acc = std::move(next);
    acc_support = next_index.Enumerate(support_cap);
  }
  return acc;
}

CountDistribution JointNextDeepPmf(const TransitionKernel& kernel, int t, int deviator_x,
                                   const OthersDeepState& others, const LocalLaw& law,
                                   std::int64_t support_cap) {
  const std::vector<double> dense =
      JointNextDeepPmfDense(kernel, t, deviator_x, others, law, support_cap);
  const CompositionIndex index(others.total(), kernel.num_states());
  CountDistribution out;
  out.total = others.total();
  out.support = index.Enumerate(support_cap);
  out.probs = dense;
  return out;
}

CountDistribution JointActionPmf(const OthersDeepState& others, const LocalLaw& law,
                                 std::int64_t support_cap) {
  const int nx = static_cast<int>(others.counts.size());
  const int nu = law.num_actions();
  std::int64_t size = 1;
  for (int x = 0; x < nx; ++x) {
    const std::int64_t s = CompositionCount(others.counts[x], nu);
    if (s > 0 && size > support_cap / s) CheckCap(support_cap + 1, support_cap);
    size *= s;
  }
  CheckCap(size, support_cap);

  CountDistribution out;
  out.total = others.total();
  out.support = {Counts(static_cast<std::size_t>(nx) * nu, 0)};
  out.probs = {1.0};
  for (int x = 0; x < nx; ++x) {
    const int c = others.counts[x];
    if (c == 0) continue;
    const std::vector<Counts> splits = CompositionIndex(c, nu).Enumerate(support_cap);
    const std::vector<double> pmf = MultinomialPmf(c, law.Row(x), splits);
    CountDistribution next;
    next.total = out.total;
    for (std::size_t a = 0; a < out.support.size(); ++a) {
      for (std::size_t b = 0; b < splits.size(); ++b) {
        if (pmf[b] == 0.0) continue;
        Counts joint = out.support[a];
        for (int u = 0; u < nu; ++u) joint[x * nu + u] = splits[b][u];
        next.support.push_back(std::move(joint));
        next.probs.push_back(out.probs[a] * pmf[b]);
      }
    }
    out = std::move(next);
  }
  return out;
}

double ExpectedStageCost(const GameSpec& spec, int t, int x, const DeepState& d,
                         std::span<const double> own_row, const LocalLaw& others_law,
                         std::int64_t support_cap) {
  const OthersDeepState others = OthersFromFull(d, x);
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  const double n = d.total();
  const CostSpec& cost = spec.cost;

  switch (cost.coupling()) {
    case Coupling::kStateOnly: {
      const std::vector<double> dist = d.Probabilities();
      double value = 0.0;
      for (int u = 0; u < nu; ++u) {
        if (own_row[u] != 0.0) value += own_row[u] * cost.EvalState(t, x, u, dist);
      }
      return value;
    }
    case Coupling::kSeparable: {
      // Affine in D at fixed d: the expectation passes inside.
      std::vector<double> mean(static_cast<std::size_t>(nx) * nu);
      for (int xp = 0; xp < nx; ++xp) {
        for (int up = 0; up < nu; ++up) {
          mean[xp * nu + up] = others.counts[xp] * others_law(xp, up) / n;
        }
      }
      double value = 0.0;
      for (int u = 0; u < nu; ++u) {
        if (own_row[u] == 0.0) continue;
        mean[x * nu + u] += 1.0 / n;
        value += own_row[u] * cost.Eval(t, x, u, mean);
        mean[x * nu + u] -= 1.0 / n;
      }
      return value;
    }
    case Coupling::kGeneral:
      break;
  }

  const CountDistribution joint = JointActionPmf(others, others_law, support_cap);
  std::vector<double> dist(static_cast<std::size_t>(nx) * nu);
  double value = 0.0;
  for (int u = 0; u < nu; ++u) {
    if (own_row[u] == 0.0) continue;
    double expect = 0.0;
    for (std::size_t s = 0; s < joint.support.size(); ++s) {
      for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = joint.support[s][i] / n;
      dist[x * nu + u] += 1.0 / n;
      expect += joint.probs[s] * cost.Eval(t, x, u, dist);
    }
    value += own_row[u] * expect;
  }
  return value;
}

MonteCarloEstimate ExpectedStageCostMonteCarlo(const GameSpec& spec, int t, int x,
                                               const DeepState& d,
                                               std::span<const double> own_row,
                                               const LocalLaw& others_law,
                                               std::int64_t samples, std::uint64_t seed) {
  const OthersDeepState others = OthersFromFull(d, x);
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  const double n = d.total();
  std::mt19937_64 rng(seed);
  std::vector<double> dist(static_cast<std::size_t>(nx) * nu);
  std::vector<std::discrete_distribution<int>> action_draws;
  for (int xp = 0; xp < nx; ++xp) {
    auto row = others_law.Row(xp);
    action_draws.emplace_back(row.begin(), row.end());
  }
  std::discrete_distribution<int> own_draw(own_row.begin(), own_row.end());

  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    std::fill(dist.begin(), dist.end(), 0.0);
    for (int xp = 0; xp < nx; ++xp) {
      for (int k = 0; k < others.counts[xp]; ++k) dist[xp * nu + action_draws[xp](rng)] += 1.0 / n;
    }
    const int u = own_draw(rng);
    dist[x * nu + u] += 1.0 / n;
    const double c = spec.cost.Eval(t, x, u, dist);
    // Welford update.
    const double delta = c - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (c - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  est.samples = samples;
  est.standard_error = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) /
                                               static_cast<double>(samples))
                                   : 0.0;
  return est;
}

MeanField MeanFieldStep(const TransitionKernel& kernel, int t, const MeanField& m,
                        const LocalLaw& law) {
  const int nx = kernel.num_states();
  MeanField out(nx, 0.0);
  std::vector<double> row(nx);
  for (int x = 0; x < nx; ++x) {
    if (m[x] == 0.0) continue;
    kernel.MixedRow(t, x, law.Row(x), m, row);
    for (int y = 0; y < nx; ++y) out[y] += m[x] * row[y];
  }
  return out;
}

double InfiniteStageCost(const CostSpec& cost, int t, int x, const MeanField& m,
                         std::span<const double> own_row, const LocalLaw& others_law) {
  const int nu = others_law.num_actions();
  double value = 0.0;
  if (cost.coupling() == Coupling::kStateOnly) {
    for (int u = 0; u < nu; ++u) {
      if (own_row[u] != 0.0) value += own_row[u] * cost.EvalState(t, x, u, m);
    }
    return value;
  }
  const int nx = static_cast<int>(m.size());
  std::vector<double> joint(static_cast<std::size_t>(nx) * nu);
  for (int xp = 0; xp < nx; ++xp) {
    for (int up = 0; up < nu; ++up) joint[xp * nu + up] = m[xp] * others_law(xp, up);
  }
  for (int u = 0; u < nu; ++u) {
    if (own_row[u] != 0.0) value += own_row[u] * cost.Eval(t, x, u, joint);
  }
  return value;
}

// ------------------------------------------------------------------ PmfCache

std::size_t PmfCache::KeyHash::operator()(const Key& k) const {
  std::size_t h = std::hash<int>()(k.stage_key) * 1000003u ^ std::hash<int>()(k.deviator_x);
  for (int c : k.others) h = h * 1000003u ^ std::hash<int>()(c);
  for (std::int64_t v : k.law) h = h * 1000003u ^ std::hash<std::int64_t>()(v);
  return h;
}

PmfCache::Value PmfCache::GetOrCompute(const TransitionKernel& kernel, int t,
                                       int deviator_x, const OthersDeepState& others,
                                       const LocalLaw& law, std::int64_t support_cap) {
  Key key{kernel.StageKey(t), deviator_x, others.counts, {}};
  key.law.reserve(law.data().size());
  for (double p : law.data()) key.law.push_back(std::llround(p * 1e12));
  {
    std::shared_lock<std::shared_mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto value = std::make_shared<const std::vector<double>>(
      JointNextDeepPmfDense(kernel, t, deviator_x, others, law, support_cap));
  std::unique_lock<std::shared_mutex> lock(mu_);
  if (stored_ + value->size() > budget_) return value;
  auto [it, inserted] = map_.try_emplace(std::move(key), value);
  if (inserted) stored_ += value->size();
  return it->second;
}

std::size_t PmfCache::size() const {
  std::shared_lock<std::shared_mutex> lock(mu_);
  return map_.size();
}

std::int64_t PmfCache::hits() const { return hits_.load(); }

void PmfCache::Clear() {
  std::unique_lock<std::shared_mutex> lock(mu_);
  map_.clear();
  stored_ = 0;
  hits_ = 0;
}

}  // namespace popgame
