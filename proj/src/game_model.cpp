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

#include "popgame/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <utility>

#include "popgame/error.hpp"

namespace popgame {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kSupportCap: return "support_cap_exceeded";
    case ErrorCode::kInconsistentState: return "inconsistent_state";
    case ErrorCode::kMissingValue: return "missing_value";
    case ErrorCode::kStrategyGap: return "strategy_gap";
    case ErrorCode::kAssumptionViolated: return "assumption_violated";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

// ---------------------------------------------------------------- LocalLaw

LocalLaw::LocalLaw(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(static_cast<std::size_t>(num_states) * num_actions,
             num_actions > 0 ? 1.0 / num_actions : 0.0) {}

LocalLaw LocalLaw::Pure(std::span<const int> action_per_state, int num_actions) {
  LocalLaw law(static_cast<int>(action_per_state.size()), num_actions);
  std::fill(law.probs_.begin(), law.probs_.end(), 0.0);
  for (std::size_t x = 0; x < action_per_state.size(); ++x) {
    law.MutableRow(static_cast<int>(x))[action_per_state[x]] = 1.0;
  }
  return law;
}

LocalLaw LocalLaw::FromRows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  LocalLaw law(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (static_cast<int>(rows[x].size()) != law.num_actions_) {
      throw Error(ErrorCode::kInvalidArgument, "ragged local law rows");
    }
    std::copy(rows[x].begin(), rows[x].end(), law.MutableRow(static_cast<int>(x)).begin());
  }
  return law;
}

bool LocalLaw::IsValid(double tol) const {
  for (int x = 0; x < num_states_; ++x) {
    double sum = 0.0;
    for (double p : Row(x)) {
      if (p < -tol || p > 1.0 + tol) return false;
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

void LocalLaw::Validate(double tol) const {
  for (int x = 0; x < num_states_; ++x) {
    double sum = 0.0;
    for (double p : Row(x)) {
      if (p < -tol || p > 1.0 + tol) {
        throw Error(ErrorCode::kInvalidArgument,
                    "local law row " + std::to_string(x) + " has entry outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream os;
      os << "local law row " << x << " sums to " << sum;
      throw Error(ErrorCode::kInvalidArgument, os.str());
    }
  }
}

std::vector<std::vector<double>> LocalLaw::Rows() const {
  std::vector<std::vector<double>> rows;
  for (int x = 0; x < num_states_; ++x) rows.emplace_back(Row(x).begin(), Row(x).end());
  return rows;
}

double LawDistance(const LocalLaw& a, const LocalLaw& b) {
  double dist = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    dist = std::max(dist, std::abs(a.data()[i] - b.data()[i]));
  }
  return dist;
}

// -------------------------------------------------------- TransitionKernel

TransitionKernel TransitionKernel::Tabular(int num_states, int num_actions,
                                           int stages,
                                           std::vector<double> probabilities,
                                           std::vector<double> slope) {
  const std::size_t expected =
      static_cast<std::size_t>(stages) * num_states * num_actions * num_states;
  if (stages < 1 || probabilities.size() != expected) {
    throw Error(ErrorCode::kInvalidArgument, "tabular kernel has wrong size");
  }
  if (!slope.empty() && slope.size() != expected * num_states) {
    throw Error(ErrorCode::kInvalidArgument, "kernel slope has wrong size");
  }
  TransitionKernel k;
  k.num_states_ = num_states;
  k.num_actions_ = num_actions;
  k.stages_ = stages;
  k.time_homogeneous_ = stages == 1;
  k.d_independent_ = std::all_of(slope.begin(), slope.end(),
                                 [](double s) { return s == 0.0; });
  k.tabular_ = true;
  k.probabilities_ = std::move(probabilities);
  k.slope_ = std::move(slope);
  return k;
}

TransitionKernel TransitionKernel::Callable(Descriptor descriptor, int num_states,
                                            int num_actions, bool time_homogeneous,
                                            bool d_independent, Fn fn) {
  TransitionKernel k;
  k.num_states_ = num_states;
  k.num_actions_ = num_actions;
  k.time_homogeneous_ = time_homogeneous;
  k.d_independent_ = d_independent;
  k.tabular_ = false;
  k.descriptor_ = std::move(descriptor);
  k.fn_ = std::move(fn);
  return k;
}

std::size_t TransitionKernel::Offset(int stage_slice, int x, int u) const {
  return ((static_cast<std::size_t>(stage_slice) * num_states_ + x) * num_actions_ + u) *
         num_states_;
}

double TransitionKernel::Eval(int t, int y, int x, int u,
                              std::span<const double> d) const {
  if (!tabular_) return fn_(t, y, x, u, d);
  const int slice = stages_ == 1 ? 0 : std::min(t, stages_) - 1;
  const std::size_t off = Offset(slice, x, u) + y;
  double p = probabilities_[off];
  if (!slope_.empty()) {
    const double* s = slope_.data() + off * num_states_;
    for (int z = 0; z < num_states_; ++z) p += s[z] * d[z];
  }
  return p;
}

void TransitionKernel::Row(int t, int x, int u, std::span<const double> d,
                           std::span<double> out) const {
  for (int y = 0; y < num_states_; ++y) out[y] = Eval(t, y, x, u, d);
}

void TransitionKernel::MixedRow(int t, int x, std::span<const double> action_probs,
                                std::span<const double> d,
                                std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (int u = 0; u < num_actions_; ++u) {
    const double w = action_probs[u];
    if (w == 0.0) continue;
    for (int y = 0; y < num_states_; ++y) out[y] += w * Eval(t, y, x, u, d);
  }
}

// ----------------------------------------------------------------- CostSpec

const char* CouplingName(Coupling c) {
  switch (c) {
    case Coupling::kStateOnly: return "d-only";
    case Coupling::kSeparable: return "separable";
    case Coupling::kGeneral: return "general";
  }
  return "unknown";
}

namespace {

std::vector<double> StateMarginal(std::span<const double> joint, int num_states,
                                  int num_actions) {
  std::vector<double> d(num_states, 0.0);
  for (int x = 0; x < num_states; ++x) {
    for (int u = 0; u < num_actions; ++u) d[x] += joint[x * num_actions + u];
  }
  return d;
}

}  // namespace

CostSpec CostSpec::StateOnly(int num_states, int num_actions, bool time_homogeneous,
                             StateFn fn, Descriptor descriptor) {
  CostSpec c;
  c.num_states_ = num_states;
  c.num_actions_ = num_actions;
  c.coupling_ = Coupling::kStateOnly;
  c.time_homogeneous_ = time_homogeneous;
  c.state_fn_ = std::move(fn);
  c.descriptor_ = std::move(descriptor);
  return c;
}

CostSpec CostSpec::Separable(int num_states, int num_actions, bool time_homogeneous,
                             StateFn own, StateFn averaged, Descriptor descriptor) {
  CostSpec c;
  c.num_states_ = num_states;
  c.num_actions_ = num_actions;
  c.coupling_ = Coupling::kSeparable;
  c.time_homogeneous_ = time_homogeneous;
  c.own_ = own;
  c.averaged_ = averaged;
  c.joint_fn_ = [own, averaged, num_states, num_actions](
                    int t, int x, int u, std::span<const double> joint) {
    const std::vector<double> d = StateMarginal(joint, num_states, num_actions);
    double value = own(t, x, u, d);
    for (int xp = 0; xp < num_states; ++xp) {
      for (int up = 0; up < num_actions; ++up) {
        const double w = joint[xp * num_actions + up];
        if (w != 0.0) value += w * averaged(t, xp, up, d);
      }
    }
    return value;
  };
  c.descriptor_ = std::move(descriptor);
  return c;
}

CostSpec CostSpec::Joint(int num_states, int num_actions, bool time_homogeneous,
                         bool affine_in_joint, JointFn fn, Descriptor descriptor) {
  CostSpec c;
  c.num_states_ = num_states;
  c.num_actions_ = num_actions;
  c.coupling_ = affine_in_joint ? Coupling::kSeparable : Coupling::kGeneral;
  c.time_homogeneous_ = time_homogeneous;
  c.joint_fn_ = std::move(fn);
  c.descriptor_ = std::move(descriptor);
  return c;
}

double CostSpec::Eval(int t, int x, int u, std::span<const double> joint) const {
  if (coupling_ == Coupling::kStateOnly) {
    return state_fn_(t, x, u, StateMarginal(joint, num_states_, num_actions_));
  }
  return joint_fn_(t, x, u, joint);
}

double CostSpec::EvalState(int t, int x, int u, std::span<const double> d) const {
  if (coupling_ != Coupling::kStateOnly) {
    throw Error(ErrorCode::kInvalidArgument,
                "EvalState called on a cost that depends on actions of others");
  }
  return state_fn_(t, x, u, d);
}

double Horizon::StageWeight(int t) const {
  if (kind == Kind::kDiscounted || beta == 1.0) return 1.0;
  return std::pow(beta, t - 1);
}

// ------------------------------------------------------------ built-in costs

CostSpec MakeConstantCost(int num_states, int num_actions, double value) {
  Descriptor desc{"constant", Json{{"value", value}}};
  return CostSpec::StateOnly(
      num_states, num_actions, true,
      [value](int, int, int, std::span<const double>) { return value; },
      std::move(desc));
}

CostSpec MakeThresholdCountCost(int num_states, int num_actions, int n, int state,
                                double lower, double upper, double below_cost,
                                double above_cost) {
  Descriptor desc{"threshold_count",
                  Json{{"n", n},
                       {"state", state},
                       {"lower", lower},
                       {"upper", upper},
                       {"below_cost", below_cost},
                       {"above_cost", above_cost}}};
  auto fn = [=](int, int x, int, std::span<const double> d) {
    // Requests held by the other n-1 players, compared with thresholds
    // shifted by the player's own request.
    const double own = x == state ? 1.0 : 0.0;
    const double others = n * d[state] - own;
    constexpr double kSlack = 1e-9;
    if (others < lower - own - kSlack) return below_cost;
    if (others >= upper - own - kSlack) return above_cost;
    return 0.0;
  };
  return CostSpec::StateOnly(num_states, num_actions, true, fn, std::move(desc));
}

CostSpec MakePolynomialCost(int num_states, int num_actions, PolynomialCost poly) {
  const std::size_t nxu = static_cast<std::size_t>(num_states) * num_actions;
  auto check = [](const std::vector<double>& v, std::size_t size, const char* name) {
    if (!v.empty() && v.size() != size) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("polynomial cost term '") + name + "' has wrong size");
    }
  };
  check(poly.base, nxu, "base");
  check(poly.state_linear, nxu * num_states, "state_linear");
  check(poly.state_quadratic, nxu * num_states, "state_quadratic");
  check(poly.joint_linear, nxu * nxu, "joint_linear");
  check(poly.joint_quadratic, nxu * nxu, "joint_quadratic");
  auto nonzero = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double a) { return a != 0.0; });
  };

  Json params;
  params["base"] = poly.base;
  if (!poly.state_linear.empty()) params["state_linear"] = poly.state_linear;
  if (!poly.state_quadratic.empty()) params["state_quadratic"] = poly.state_quadratic;
  if (!poly.joint_linear.empty()) params["joint_linear"] = poly.joint_linear;
  if (!poly.joint_quadratic.empty()) params["joint_quadratic"] = poly.joint_quadratic;
  Descriptor desc{"polynomial", params};

  auto state_part = [poly, num_states, num_actions](int x, int u,
                                                    std::span<const double> d) {
    const std::size_t xu = static_cast<std::size_t>(x) * num_actions + u;
    double value = poly.base.empty() ? 0.0 : poly.base[xu];
    for (int z = 0; z < num_states; ++z) {
      if (!poly.state_linear.empty()) value += poly.state_linear[xu * num_states + z] * d[z];
      if (!poly.state_quadratic.empty()) {
        value += poly.state_quadratic[xu * num_states + z] * d[z] * d[z];
      }
    }
    return value;
  };

  if (!nonzero(poly.joint_linear) && !nonzero(poly.joint_quadratic)) {
    return CostSpec::StateOnly(
        num_states, num_actions, true,
        [state_part](int, int x, int u, std::span<const double> d) {
          return state_part(x, u, d);
        },
        std::move(desc));
  }
  const bool affine = !nonzero(poly.joint_quadratic);
  auto fn = [poly, state_part, num_states, num_actions, nxu](
                int, int x, int u, std::span<const double> joint) {
    const std::vector<double> d = StateMarginal(joint, num_states, num_actions);
    double value = state_part(x, u, d);
    const std::size_t row = (static_cast<std::size_t>(x) * num_actions + u) * nxu;
    for (std::size_t j = 0; j < nxu; ++j) {
      if (!poly.joint_linear.empty()) value += poly.joint_linear[row + j] * joint[j];
      if (!poly.joint_quadratic.empty()) {
        value += poly.joint_quadratic[row + j] * joint[j] * joint[j];
      }
    }
    return value;
  };
  return CostSpec::Joint(num_states, num_actions, true, affine, fn, std::move(desc));
}

// --------------------------------------------------------------- registries

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, CostFactory> costs;
  std::map<std::string, KernelFactory> kernels;
};

std::vector<double> DoubleArray(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<double>>();
}

Registry& GlobalRegistry() {
  static Registry* registry = [] {
    auto* r = new Registry;
    r->costs["constant"] = [](const Json& p, int nx, int nu) {
      return MakeConstantCost(nx, nu, p.at("value").get<double>());
    };
    r->costs["threshold_count"] = [](const Json& p, int nx, int nu) {
      return MakeThresholdCountCost(nx, nu, p.at("n").get<int>(), p.at("state").get<int>(),
                                    p.at("lower").get<double>(), p.at("upper").get<double>(),
                                    p.at("below_cost").get<double>(),
                                    p.at("above_cost").get<double>());
    };
    r->costs["polynomial"] = [](const Json& p, int nx, int nu) {
      PolynomialCost poly;
      poly.base = DoubleArray(p, "base");
      poly.state_linear = DoubleArray(p, "state_linear");
      poly.state_quadratic = DoubleArray(p, "state_quadratic");
      poly.joint_linear = DoubleArray(p, "joint_linear");
      poly.joint_quadratic = DoubleArray(p, "joint_quadratic");
      return MakePolynomialCost(nx, nu, std::move(poly));
    };
    return r;
  }();
  return *registry;
}

}  // namespace

void RegisterCost(const std::string& type, CostFactory factory) {
  Registry& r = GlobalRegistry();
  std::lock_guard<std::mutex> lock(r.mu);
  r.costs[type] = std::move(factory);
}

void RegisterKernel(const std::string& type, KernelFactory factory) {
  Registry& r = GlobalRegistry();
  std::lock_guard<std::mutex> lock(r.mu);
  r.kernels[type] = std::move(factory);
}

// --------------------------------------------------------------- validation

std::string ValidationReport::ToString() const {
  if (ok()) return "pass";
  std::ostringstream os;
  for (const auto& issue : issues) os << issue.location << ": " << issue.message << "\n";
  return os.str();
}

namespace {

std::string FormatNumber(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Vertices of the simplex over `dim` coordinates plus its barycenter.
std::vector<std::vector<double>> SimplexProbePoints(int dim) {
  std::vector<std::vector<double>> points;
  for (int i = 0; i < dim; ++i) {
    std::vector<double> v(dim, 0.0);
    v[i] = 1.0;
    points.push_back(std::move(v));
  }
  points.emplace_back(dim, 1.0 / dim);
  return points;
}

}  // namespace

ValidationReport Validate(const GameSpec& spec) {
  ValidationReport report;
  auto add = [&report](std::string loc, std::string msg) {
    report.issues.push_back({std::move(loc), std::move(msg)});
  };
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  if (nx < 1) add("/states", "state space must be non-empty");
  if (nu < 1) add("/actions", "action space must be non-empty");
  if (spec.n < 2) add("/n", "population size must be >= 2");
  if (!report.ok()) return report;

  const Horizon& h = spec.horizon;
  if (h.finite()) {
    if (h.stages < 1) add("/horizon", "horizon must be >= 1");
    if (!(h.beta > 0.0 && h.beta <= 1.0)) add("/discount", "finite-horizon discount must lie in (0,1]");
  } else {
    if (!(h.beta > 0.0 && h.beta < 1.0)) add("/beta", "discount factor must lie in (0,1)");
    if (!spec.kernel.time_homogeneous()) add("/kernel", "discounted mode requires a time-homogeneous kernel");
    if (!spec.cost.time_homogeneous()) add("/cost", "discounted mode requires a time-homogeneous cost");
  }
  if (spec.kernel.num_states() != nx || spec.kernel.num_actions() != nu) {
    add("/kernel", "kernel shape does not match the state/action spaces");
    return report;
  }

  if (static_cast<int>(spec.initial_dist.size()) != nx) {
    add("/initial_dist", "initial distribution has wrong length");
  } else {
    double sum = 0.0;
    for (double p : spec.initial_dist) {
      if (p < 0.0) add("/initial_dist", "initial distribution has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTol) {
      add("/initial_dist", "initial distribution sums to " + FormatNumber(sum) + " ≠ 1");
    }
  }

  const int stages = h.finite() ? std::max(h.stages, 1) : 1;
  const int kernel_stages = spec.kernel.time_homogeneous() ? 1 : stages;
  const auto probes = SimplexProbePoints(nx);
  std::vector<double> row(nx);
  for (int t = 1; t <= kernel_stages; ++t) {
    for (int x = 0; x < nx; ++x) {
      for (int u = 0; u < nu; ++u) {
        for (std::size_t k = 0; k < probes.size(); ++k) {
          spec.kernel.Row(t, x, u, probes[k], row);
          double sum = 0.0;
          bool negative = false;
          for (double p : row) {
            sum += p;
            negative |= p < -kNormTol;
          }
          std::ostringstream loc;
          loc << "/kernel[t=" << t << ",x=" << x << ",u=" << u << ",probe=" << k << "]";
          if (std::abs(sum - 1.0) > kNormTol) {
            add(loc.str(), "row sum " + FormatNumber(sum) + " ≠ 1");
          }
          if (negative) add(loc.str(), "transition probability must be nonnegative");
        }
      }
    }
  }

  // Cost sign on the vertices and barycenter of the joint simplex, plus a
  // fixed pseudo-random sample.
  auto joint_probes = SimplexProbePoints(nx * nu);
  std::mt19937_64 rng(0x5eed);
  std::exponential_distribution<double> expo(1.0);
  for (int i = 0; i < 16; ++i) {
    std::vector<double> v(nx * nu);
    double total = 0.0;
    for (double& a : v) total += (a = expo(rng));
    for (double& a : v) a /= total;
    joint_probes.push_back(std::move(v));
  }
  const int cost_stages = spec.cost.time_homogeneous() ? 1 : stages;
  for (int t = 1; t <= cost_stages; ++t) {
    for (int x = 0; x < nx; ++x) {
      for (int u = 0; u < nu; ++u) {
        for (std::size_t k = 0; k < joint_probes.size(); ++k) {
          const double c = spec.cost.Eval(t, x, u, joint_probes[k]);
          if (!(c >= 0.0) || !std::isfinite(c)) {
            std::ostringstream loc;
            loc << "/cost[t=" << t << ",x=" << x << ",u=" << u << ",probe=" << k << "]";
            add(loc.str(), "cost must be nonnegative (got " + FormatNumber(c) + ")");
            break;
          }
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------- Example 1

GameSpec BuildExample1(const Example1Params& e) {
  GameSpec spec;
  spec.states.labels = {"0", "1"};
  spec.actions.labels = {"1", "2", "3"};
  spec.n = e.n;
  spec.horizon = e.horizon > 0 ? Horizon::Finite(e.horizon, e.beta) : Horizon::Discounted(e.beta);
  // [x][u][y]
  std::vector<double> probs = {
      // x = 0
      1 - e.p, e.p,                    // u = 1
      1 - e.p_decrease, e.p_decrease,  // u = 2
      1 - e.p_increase, e.p_increase,  // u = 3
      // x = 1
      e.q, 1 - e.q,                    // u = 1
      e.q_decrease, 1 - e.q_decrease,  // u = 2
      e.q, 1 - e.q,                    // u = 3
  };
  spec.kernel = TransitionKernel::Tabular(2, 3, 1, std::move(probs));
  spec.cost = MakeThresholdCountCost(2, 3, e.n, 1, e.lower, e.upper, e.underload_cost,
                                     e.overload_cost);
  spec.initial_dist = e.initial_dist;
  return spec;
}

GameSpec BuildExample1Small() {
  Example1Params e;
  e.n = 10;
  e.lower = 3;
  e.upper = 7;
  e.horizon = 10;
  return BuildExample1(e);
}

GameSpec BuildCoupledBinary(const CoupledBinaryParams& c) {
  GameSpec spec;
  spec.states.labels = {"0", "1"};
  spec.actions.labels = {"stay", "switch"};
  spec.n = c.n;
  spec.horizon = Horizon::Finite(c.horizon);
  // [x][u][y]
  std::vector<double> probs = {0.9, 0.1, 0.15, 0.85, 0.1, 0.9, 0.85, 0.15};
  // [x][u][y][z]
  std::vector<double> slope(16, 0.0);
  auto at = [](int x, int u, int y, int z) { return ((x * 2 + u) * 2 + y) * 2 + z; };
  slope[at(0, 1, 1, 1)] = -c.crowding;
  slope[at(0, 1, 0, 1)] = c.crowding;
  slope[at(1, 1, 0, 0)] = -c.crowding;
  slope[at(1, 1, 1, 0)] = c.crowding;
  spec.kernel = TransitionKernel::Tabular(2, 2, 1, std::move(probs), std::move(slope));
  PolynomialCost poly;
  poly.base = {0.0, c.switch_cost, 0.0, c.switch_cost};
  // [x][u][z]
  poly.state_linear = {1, 0, 1, 0, 0, 1, 0, 1};
  spec.cost = MakePolynomialCost(2, 2, std::move(poly));
  spec.initial_dist = {c.initial_zero, 1.0 - c.initial_zero};
  return spec;
}

GameSpec BuiltinModel(const std::string& name, int n, int horizon) {
  if (name == "example1") {
    Example1Params e;
    if (n > 0) e.n = n;
    if (horizon > 0) e.horizon = horizon;
    return BuildExample1(e);
  }
  if (name == "example1-small") {
    Example1Params e;
    e.n = 10;
    e.lower = 3;
    e.upper = 7;
    e.horizon = 10;
    if (n > 0) e.n = n;
    if (horizon > 0) e.horizon = horizon;
    return BuildExample1(e);
  }
  if (name == "coupled-binary") {
    CoupledBinaryParams c;
    if (n > 0) c.n = n;
    if (horizon > 0) c.horizon = horizon;
    return BuildCoupledBinary(c);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown builtin model '" + name + "'");
}

// ---------------------------------------------------------------------- I/O

namespace {

Json Nest(const std::vector<double>& flat, const std::vector<int>& dims,
          std::size_t& pos, std::size_t level) {
  Json arr = Json::array();
  for (int i = 0; i < dims[level]; ++i) {
    if (level + 1 == dims.size()) {
      arr.push_back(flat[pos++]);
    } else {
      arr.push_back(Nest(flat, dims, pos, level + 1));
    }
  }
  return arr;
}

Json Nest(const std::vector<double>& flat, const std::vector<int>& dims) {
  std::size_t pos = 0;
  return Nest(flat, dims, pos, 0);
}

void Flatten(const Json& j, const std::vector<int>& dims, std::size_t level,
             const std::string& path, std::vector<double>& out) {
  if (!j.is_array() || static_cast<int>(j.size()) != dims[level]) {
    static const char* kAxis[] = {"stages", "states", "actions", "states", "states"};
    const char* axis = level < 5 ? kAxis[level] : "entries";
    throw ParseError(path, "expected an array of " + std::to_string(dims[level]) + " " +
                               axis + ", got " +
                               (j.is_array() ? std::to_string(j.size()) : j.type_name()));
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string child = path + "/" + std::to_string(i);
    if (level + 1 == dims.size()) {
      if (!j[i].is_number()) throw ParseError(child, "expected a number");
      out.push_back(j[i].get<double>());
    } else {
      Flatten(j[i], dims, level + 1, child, out);
    }
  }
}

const Json& Field(const Json& j, const std::string& parent, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(parent + "/" + key, "missing field");
  }
  return j.at(key);
}

}  // namespace

Json GameSpecToJson(const GameSpec& spec) {
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["states"] = spec.states.labels;
  j["actions"] = spec.actions.labels;
  j["n"] = spec.n;
  if (spec.horizon.finite()) {
    j["horizon"] = spec.horizon.stages;
    if (spec.horizon.beta != 1.0) j["discount"] = spec.horizon.beta;
  } else {
    j["beta"] = spec.horizon.beta;
  }

  const TransitionKernel& k = spec.kernel;
  Json kernel;
  if (k.is_tabular()) {
    kernel["probabilities"] = Nest(k.probabilities(), {k.stages(), nx, nu, nx});
    if (!k.slope().empty()) {
      kernel["d_dependence"] = {{"type", "affine"},
                                {"slope", Nest(k.slope(), {k.stages(), nx, nu, nx, nx})}};
    }
  } else {
    if (k.descriptor().type.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "callable kernel has no registered type");
    }
    kernel["type"] = k.descriptor().type;
    kernel["params"] = k.descriptor().params;
  }
  j["kernel"] = kernel;

  if (spec.cost.descriptor().type.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cost has no registered type; cannot serialize");
  }
  j["cost"] = {{"type", spec.cost.descriptor().type},
               {"params", spec.cost.descriptor().params}};
  j["initial_dist"] = spec.initial_dist;
  return j;
}

GameSpec GameSpecFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("", "model file must be a JSON object");
  const Json& version = Field(j, "", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw ParseError("/schema_version",
                     "unknown schema version " + version.dump() + " (expected " +
                         std::to_string(kSchemaVersion) + ")");
  }
  GameSpec spec;
  try {
    spec.states.labels = Field(j, "", "states").get<std::vector<std::string>>();
    spec.actions.labels = Field(j, "", "actions").get<std::vector<std::string>>();
    spec.n = Field(j, "", "n").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("", std::string("malformed header field: ") + e.what());
  }
  const int nx = spec.num_states();
  const int nu = spec.num_actions();
  if (nx < 1) throw ParseError("/states", "state space must be non-empty");
  if (nu < 1) throw ParseError("/actions", "action space must be non-empty");

  if (j.contains("horizon")) {
    const int T = j.at("horizon").get<int>();
    if (T < 1) throw ParseError("/horizon", "horizon must be ≥ 1");
    spec.horizon = Horizon::Finite(T, j.value("discount", 1.0));
  } else if (j.contains("beta")) {
    spec.horizon = Horizon::Discounted(j.at("beta").get<double>());
  } else {
    throw ParseError("/horizon", "missing field (need 'horizon' or 'beta')");
  }

  const Json& kernel = Field(j, "", "kernel");
  if (kernel.contains("probabilities")) {
    const Json& probs = kernel.at("probabilities");
    const int stages = probs.is_array() ? static_cast<int>(probs.size()) : 0;
    if (stages < 1) throw ParseError("/kernel/probabilities", "expected at least one stage");
    std::vector<double> flat;
    Flatten(probs, {stages, nx, nu, nx}, 0, "/kernel/probabilities", flat);
    std::vector<double> slope;
    if (kernel.contains("d_dependence")) {
      const Json& dep = kernel.at("d_dependence");
      const std::string type = Field(dep, "/kernel/d_dependence", "type").get<std::string>();
      if (type != "affine") {
        throw ParseError("/kernel/d_dependence/type", "unsupported d_dependence '" + type + "'");
      }
      Flatten(Field(dep, "/kernel/d_dependence", "slope"), {stages, nx, nu, nx, nx}, 0,
              "/kernel/d_dependence/slope", slope);
    }
    spec.kernel = TransitionKernel::Tabular(nx, nu, stages, std::move(flat), std::move(slope));
  } else {
    const std::string type = Field(kernel, "/kernel", "type").get<std::string>();
    KernelFactory factory;
    {
      Registry& r = GlobalRegistry();
      std::lock_guard<std::mutex> lock(r.mu);
      auto it = r.kernels.find(type);
      if (it == r.kernels.end()) throw ParseError("/kernel/type", "unregistered kernel type '" + type + "'");
      factory = it->second;
    }
    spec.kernel = factory(kernel.value("params", Json::object()), nx, nu);
  }

  const Json& cost = Field(j, "", "cost");
  const std::string cost_type = Field(cost, "/cost", "type").get<std::string>();
  CostFactory cost_factory;
  {
    Registry& r = GlobalRegistry();
    std::lock_guard<std::mutex> lock(r.mu);
    auto it = r.costs.find(cost_type);
    if (it == r.costs.end()) throw ParseError("/cost/type", "unregistered cost type '" + cost_type + "'");
    cost_factory = it->second;
  }
  try {
    spec.cost = cost_factory(cost.value("params", Json::object()), nx, nu);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("/cost/params", e.what());
  } catch (const Error& e) {
    throw ParseError("/cost/params", e.what());
  }

  const Json& init = Field(j, "", "initial_dist");
  if (!init.is_array() || static_cast<int>(init.size()) != nx) {
    throw ParseError("/initial_dist", "expected " + std::to_string(nx) + " probabilities");
  }
  spec.initial_dist = init.get<std::vector<double>>();
  return spec;
}

GameSpec LoadGameSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  return GameSpecFromJson(j);
}

void SaveGameSpec(const GameSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model file " + path);
  out << GameSpecToJson(spec).dump(2) << "\n";
}

bool SameSpec(const GameSpec& a, const GameSpec& b) {
  return GameSpecToJson(a) == GameSpecToJson(b);
}

}  // namespace popgame
