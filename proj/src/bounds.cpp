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

#include "popgame/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "popgame/deep_dynamics.hpp"
#include "popgame/error.hpp"

namespace popgame {
namespace {

double PerStage(const std::vector<double>& v, int t, const char* name) {
  if (v.empty()) {
    throw Error(ErrorCode::kMissingValue, std::string("constant ") + name + " is not set");
  }
  if (v.size() == 1) return v[0];
  if (t < 1 || t > static_cast<int>(v.size())) {
    throw Error(ErrorCode::kMissingValue,
                std::string("constant ") + name + " does not cover stage " + std::to_string(t));
  }
  return v[t - 1];
}

std::vector<double> Dirichlet(std::mt19937_64& rng, int size) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(size);
  double sum = 0.0;
  for (double& x : v) sum += (x = g(rng));
  for (double& x : v) x /= sum;
  return v;
}

// A nearby point: a small random move along the simplex.
std::vector<double> Nudge(std::mt19937_64& rng, const std::vector<double>& base, double scale) {
  const std::vector<double> target = Dirichlet(rng, static_cast<int>(base.size()));
  std::vector<double> v(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) v[i] = (1.0 - scale) * base[i] + scale * target[i];
  return v;
}

double SupDistance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

const char* ProvenanceName(BoundConstants::Provenance p) {
  return p == BoundConstants::Provenance::kEstimated ? "grid-estimated" : "user-supplied";
}

}  // namespace

double BoundConstants::KpAt(int t) const { return PerStage(Kp, t, "Kp"); }
double BoundConstants::KcAt(int t) const { return PerStage(Kc, t, "Kc"); }
double BoundConstants::KmAt(int t) const { return PerStage(Km, t, "Km"); }

BoundConstants EstimateConstants(const GameSpec& spec, int sample_budget, std::uint64_t seed) {
  if (sample_budget < 0) throw Error(ErrorCode::kInvalidArgument, "sample budget must be >= 0");
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  const bool homogeneous = spec.kernel.time_homogeneous() && spec.cost.time_homogeneous();
  const int stages = (spec.horizon.finite() && !homogeneous) ? spec.horizon.stages : 1;

  BoundConstants c;
  c.provenance = BoundConstants::Provenance::kEstimated;
  c.beta = spec.horizon.beta;
  c.decoupled = spec.kernel.d_independent();
  c.samples = sample_budget;
  c.Kp.assign(stages, 0.0);
  c.Kc.assign(stages, 0.0);
  c.Km.assign(stages, c.decoupled ? 1.0 : 0.0);

  const std::size_t joint_size = static_cast<std::size_t>(nx) * nu;
  // Cost magnitude at the joint vertices.
  for (int s = 1; s <= stages; ++s) {
    std::vector<double> joint(joint_size, 0.0);
    for (std::size_t v = 0; v < joint_size; ++v) {
      std::fill(joint.begin(), joint.end(), 0.0);
      joint[v] = 1.0;
      for (int x = 0; x < nx; ++x) {
        for (int u = 0; u < nu; ++u) {
          c.cost_bound = std::max(c.cost_bound, std::abs(spec.cost.Eval(s, x, u, joint)));
        }
      }
    }
  }

  for (int i = 0; i < sample_budget; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), 0x5eedu};
    std::mt19937_64 rng(seq);
    // Odd samples probe local slopes with a nearby partner.
    const bool local = (i % 2) == 1;
    const std::vector<double> d = Dirichlet(rng, nx);
    const std::vector<double> m = local ? Nudge(rng, d, 1e-3) : Dirichlet(rng, nx);
    const std::vector<double> dj = Dirichlet(rng, static_cast<int>(joint_size));
    const std::vector<double> mj =
        local ? Nudge(rng, dj, 1e-3) : Dirichlet(rng, static_cast<int>(joint_size));
    std::vector<std::vector<double>> rows;
    for (int x = 0; x < nx; ++x) rows.push_back(Dirichlet(rng, nu));
    const LocalLaw law = LocalLaw::FromRows(rows);

    const double dist = SupDistance(d, m);
    const double jdist = SupDistance(dj, mj);
    for (int s = 1; s <= stages; ++s) {
      if (!c.decoupled && dist > 0.0) {
        for (int x = 0; x < nx; ++x) {
          for (int u = 0; u < nu; ++u) {
            double num = 0.0;
            for (int y = 0; y < nx; ++y) {
              num = std::max(num, std::abs(spec.kernel.Eval(s, y, x, u, d) -
                                           spec.kernel.Eval(s, y, x, u, m)));
            }
            c.Kp[s - 1] = std::max(c.Kp[s - 1], num / dist);
          }
        }
        const MeanField fd = MeanFieldStep(spec.kernel, s, d, law);
        const MeanField fm = MeanFieldStep(spec.kernel, s, m, law);
        c.Km[s - 1] = std::max(c.Km[s - 1], SupDistance(fd, fm) / dist);
      }
      if (jdist > 0.0) {
        for (int x = 0; x < nx; ++x) {
          for (int u = 0; u < nu; ++u) {
            const double a = spec.cost.Eval(s, x, u, dj);
            const double b = spec.cost.Eval(s, x, u, mj);
            c.cost_bound = std::max({c.cost_bound, std::abs(a), std::abs(b)});
            c.Kc[s - 1] = std::max(c.Kc[s - 1], std::abs(a - b) / jdist);
          }
        }
      }
    }
  }
  return c;
}

KvKoResult KvKo(const BoundConstants& constants, int horizon) {
  if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  const double beta = constants.beta;
  auto kc = [&](int t) { return t > horizon ? 0.0 : constants.KcAt(t); };
  KvKoResult r;
  r.Kv.assign(horizon, 0.0);
  r.Ko.assign(horizon, 0.0);
  double kv_next = 0.0;
  double ko_next = 0.0;
  for (int t = horizon; t >= 1; --t) {
    double tail = 0.0;
    double weight = 1.0;
    for (int tau = 1; tau <= t + 1; ++tau) {
      tail += weight * kc(tau);
      weight *= beta;
    }
    const double kv = kc(t) + kv_next * constants.KmAt(t) + constants.KpAt(t) * tail;
    const double ko = kv_next + ko_next;
    r.Kv[t - 1] = kv;
    r.Ko[t - 1] = ko;
    kv_next = kv;
    ko_next = ko;
  }
  return r;
}

BoundValue FiniteBound(const KvKoResult& k, int n, double gap) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (k.Kv.empty()) throw Error(ErrorCode::kMissingValue, "constants do not cover the horizon");
  BoundValue b;
  b.bracket = k.Ko[0];
  b.value = k.Kv[0] * gap + k.Ko[0] / std::sqrt(static_cast<double>(n));
  b.label = "up to the unspecified O-constant";
  return b;
}

DiscountedBoundResult DiscountedBound(const BoundConstants& constants, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  const double beta = constants.beta;
  if (!(beta > 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "discounted bound needs beta in (0, 1)");
  }
  DiscountedBoundResult r;
  double kp = constants.KpAt(1);
  double km = constants.KmAt(1);
  const double kc = constants.KcAt(1);
  if (constants.decoupled) {
    kp = 0.0;
    km = 1.0;
    r.decoupled_shortcut = true;
  }
  r.beta_km = beta * km;
  if (!constants.decoupled && r.beta_km >= 1.0) {
    r.ok = false;
    r.message = "assumption violated: beta * Km = " + std::to_string(r.beta_km) + " >= 1";
    return r;
  }
  r.ok = true;
  r.bound.bracket = (2.0 - beta) * (1.0 - beta + kp) / (1.0 - beta) * kc / (1.0 - beta * km);
  r.bound.value = r.bound.bracket / std::sqrt(static_cast<double>(n));
  r.bound.label = "up to the unspecified O-constant";
  return r;
}

Json BoundConstantsToJson(const BoundConstants& c) {
  return Json{{"Kp", c.Kp},
              {"Kc", c.Kc},
              {"Km", c.Km},
              {"beta", c.beta},
              {"provenance", ProvenanceName(c.provenance)},
              {"decoupled", c.decoupled},
              {"cost_bound", c.cost_bound},
              {"samples", c.samples},
              {"note", c.provenance == BoundConstants::Provenance::kEstimated
                           ? "sample maxima of difference quotients: lower bounds on the "
                             "true Lipschitz constants"
                           : "supplied by the user"}};
}

BoundConstants BoundConstantsFromJson(const Json& j) {
  BoundConstants c;
  try {
    c.Kp = j.at("Kp").get<std::vector<double>>();
    c.Kc = j.at("Kc").get<std::vector<double>>();
    c.Km = j.at("Km").get<std::vector<double>>();
    c.beta = j.value("beta", 1.0);
    c.decoupled = j.value("decoupled", false);
    c.cost_bound = j.value("cost_bound", 0.0);
  } catch (const Json::exception& e) {
    throw ParseError("constants", e.what());
  }
  for (const auto* v : {&c.Kp, &c.Kc, &c.Km}) {
    for (double x : *v) {
      if (!(x >= 0.0)) throw Error(ErrorCode::kSchema, "constants must be nonnegative");
    }
  }
  c.provenance = BoundConstants::Provenance::kUserSupplied;
  return c;
}

Json KvKoToJson(const KvKoResult& k) { return Json{{"Kv", k.Kv}, {"Ko", k.Ko}}; }

Json BoundValueToJson(const BoundValue& b) {
  return Json{{"value", b.value}, {"bracket", b.bracket}, {"label", b.label}};
}

Json DiscountedBoundToJson(const DiscountedBoundResult& r) {
  Json j{{"ok", r.ok}, {"beta_km", r.beta_km}, {"decoupled_shortcut", r.decoupled_shortcut}};
  if (r.ok) {
    j["bound"] = BoundValueToJson(r.bound);
  } else {
    j["refusal"] = r.message;
  }
  return j;
}

}  // namespace popgame
