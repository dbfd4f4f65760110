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

#ifndef POPGAME_GAME_MODEL_HPP_
#define POPGAME_GAME_MODEL_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace popgame {

using Json = nlohmann::json;

// Tolerance for "sums to one" checks on model data.
inline constexpr double kNormTol = 1e-12;

struct StateSpace {
  std::vector<std::string> labels;
  int size() const { return static_cast<int>(labels.size()); }
};

struct ActionSpace {
  std::vector<std::string> labels;
  int size() const { return static_cast<int>(labels.size()); }
};

// Map from a local state to a distribution over actions. Stored row-major,
// one row per state.
class LocalLaw {
 public:
  LocalLaw() = default;
  // Uniform rows.
  LocalLaw(int num_states, int num_actions);

  static LocalLaw Pure(std::span<const int> action_per_state, int num_actions);
  static LocalLaw FromRows(const std::vector<std::vector<double>>& rows);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<const double> Row(int x) const {
    return {probs_.data() + static_cast<std::size_t>(x) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  std::span<double> MutableRow(int x) {
    return {probs_.data() + static_cast<std::size_t>(x) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  double operator()(int x, int u) const {
    return probs_[static_cast<std::size_t>(x) * num_actions_ + u];
  }
  const std::vector<double>& data() const { return probs_; }

  // Every row in [0,1] and summing to one within `tol`.
  bool IsValid(double tol = kNormTol) const;
  // Throws kInvalidArgument naming the first bad row.
  void Validate(double tol = kNormTol) const;

  std::vector<std::vector<double>> Rows() const;

  friend bool operator==(const LocalLaw&, const LocalLaw&) = default;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> probs_;
};

// Max absolute entry difference of two laws of the same shape.
double LawDistance(const LocalLaw& a, const LocalLaw& b);

// Serializable identity of a plug-in kernel or cost: the registry name and
// its parameters. An empty type means "not serializable".
struct Descriptor {
  std::string type;
  Json params;
};

// Transition probabilities T_t(y | x, u, d). Stages are 1-based. The kernel
// may depend on the population distribution d (a probability vector over
// states); the deviator's own transition and everybody else's use the same d.
class TransitionKernel {
 public:
  using Fn = std::function<double(int t, int y, int x, int u,
                                  std::span<const double> d)>;

  TransitionKernel() = default;

  // Tabular kernel. `probabilities` is indexed [stage][x][u][y]; a single
  // stage slice makes the kernel time-homogeneous. When `slope` is non-empty
  // the kernel is affine in d:
  //   T(y|x,u,d) = probabilities[s][x][u][y] + sum_z slope[s][x][u][y][z] d(z).
  static TransitionKernel Tabular(int num_states, int num_actions, int stages,
                                  std::vector<double> probabilities,
                                  std::vector<double> slope = {});

  static TransitionKernel Callable(Descriptor descriptor, int num_states,
                                   int num_actions, bool time_homogeneous,
                                   bool d_independent, Fn fn);

  double Eval(int t, int y, int x, int u, std::span<const double> d) const;

  // out[y] = T(y|x,u,d).
  void Row(int t, int x, int u, std::span<const double> d,
           std::span<double> out) const;
  // out[y] = sum_u action_probs[u] T(y|x,u,d).
  void MixedRow(int t, int x, std::span<const double> action_probs,
                std::span<const double> d, std::span<double> out) const;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  bool time_homogeneous() const { return time_homogeneous_; }
  bool d_independent() const { return d_independent_; }
  bool is_tabular() const { return tabular_; }
  // Number of stored stage slices (tabular kernels only).
  int stages() const { return stages_; }
  // Identifies stages with identical kernels; used as a cache key.
  int StageKey(int t) const { return time_homogeneous_ ? 0 : t; }

  const std::vector<double>& probabilities() const { return probabilities_; }
  const std::vector<double>& slope() const { return slope_; }
  const Descriptor& descriptor() const { return descriptor_; }

 private:
  std::size_t Offset(int stage_slice, int x, int u) const;

  int num_states_ = 0;
  int num_actions_ = 0;
  int stages_ = 1;
  bool time_homogeneous_ = true;
  bool d_independent_ = true;
  bool tabular_ = true;
  std::vector<double> probabilities_;
  std::vector<double> slope_;
  Descriptor descriptor_;
  Fn fn_;
};

// How the stage cost c_t(x, u, D) depends on the joint state-action
// distribution D.
enum class Coupling {
  kStateOnly,  // through the state marginal d only
  kSeparable,  // affine in D once the state marginal d is fixed
  kGeneral,
};

const char* CouplingName(Coupling c);

// Stage cost c_t(x, u, D) >= 0. D is a probability vector over state-action
// pairs stored row-major [x][u].
class CostSpec {
 public:
  using StateFn = std::function<double(int t, int x, int u,
                                       std::span<const double> d)>;
  using JointFn = std::function<double(int t, int x, int u,
                                       std::span<const double> joint)>;

  CostSpec() = default;

  static CostSpec StateOnly(int num_states, int num_actions, bool time_homogeneous,
                            StateFn fn, Descriptor descriptor = {});
  // c(x,u,D) = own(x,u,d) + sum_{x',u'} D(x',u') averaged(x',u',d).
  static CostSpec Separable(int num_states, int num_actions, bool time_homogeneous,
                            StateFn own, StateFn averaged,
                            Descriptor descriptor = {});
  // `affine_in_joint` declares the separable structure for a cost given only
  // as a joint function.
  static CostSpec Joint(int num_states, int num_actions, bool time_homogeneous,
                        bool affine_in_joint, JointFn fn,
                        Descriptor descriptor = {});

  double Eval(int t, int x, int u, std::span<const double> joint) const;
  // Only for kStateOnly costs.
  double EvalState(int t, int x, int u, std::span<const double> d) const;

  Coupling coupling() const { return coupling_; }
  bool time_homogeneous() const { return time_homogeneous_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Descriptor& descriptor() const { return descriptor_; }

  // The separable components, when constructed through Separable().
  const StateFn& own_part() const { return own_; }
  const StateFn& averaged_part() const { return averaged_; }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  Coupling coupling_ = Coupling::kStateOnly;
  bool time_homogeneous_ = true;
  StateFn state_fn_;
  StateFn own_;
  StateFn averaged_;
  JointFn joint_fn_;
  Descriptor descriptor_;
};

struct Horizon {
  enum class Kind { kFinite, kDiscounted };

  Kind kind = Kind::kFinite;
  int stages = 1;
  // Finite mode: stage t is weighted by beta^(t-1) (1 = undiscounted).
  // Discounted mode: the infinite-horizon discount factor.
  double beta = 1.0;

  static Horizon Finite(int stages, double discount = 1.0) {
    return {Kind::kFinite, stages, discount};
  }
  static Horizon Discounted(double beta) { return {Kind::kDiscounted, 0, beta}; }

  bool finite() const { return kind == Kind::kFinite; }
  // Weight of stage t in the finite-horizon objective.
  double StageWeight(int t) const;
};

struct GameSpec {
  StateSpace states;
  ActionSpace actions;
  int n = 2;
  Horizon horizon;
  TransitionKernel kernel;
  CostSpec cost;
  std::vector<double> initial_dist;

  int num_states() const { return states.size(); }
  int num_actions() const { return actions.size(); }
};

struct ValidationIssue {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string ToString() const;
};

// Checks kernel normalization and sign on the simplex vertices plus the
// uniform point for every (t, x, u), cost sign on a fixed sample of joint
// distributions, the initial distribution, and horizon consistency.
ValidationReport Validate(const GameSpec& spec);

struct Example1Params {
  int n = 100;
  double p = 0.3;
  double q = 0.3;
  double p_decrease = 0.2;
  double q_decrease = 0.4;
  double p_increase = 0.4;
  double beta = 0.9;
  int lower = 30;   // underload threshold on the request count
  int upper = 70;   // overload threshold
  double underload_cost = 5.0;
  double overload_cost = 1.0;
  std::vector<double> initial_dist = {0.5, 0.5};
  // 0 gives the discounted game; T > 0 a finite horizon discounted by beta.
  int horizon = 0;
};

// Shared-resource request game: states {0 = idle, 1 = pending request},
// actions {1 = plain request, 2 = agree to decrease, 3 = agree to increase}.
GameSpec BuildExample1(const Example1Params& params = {});

// Ten players, thresholds scaled to 3 and 7, finite horizon 10.
GameSpec BuildExample1Small();

// Two states, actions {stay, switch}. Switching into a state gets harder as
// it fills up, and each state costs its own occupancy plus a switching fee.
struct CoupledBinaryParams {
  int n = 16;
  int horizon = 5;
  double crowding = 0.5;     // slope of the switch probability in d
  double switch_cost = 0.05;
  double initial_zero = 0.8;  // P(x_1 = 0)
};
GameSpec BuildCoupledBinary(const CoupledBinaryParams& params = {});

// Builtin models by name: example1, example1-small, coupled-binary. `n` and
// `horizon` override the defaults when positive.
GameSpec BuiltinModel(const std::string& name, int n = 0, int horizon = 0);

// Built-in cost families, also reachable through the registry by name.
CostSpec MakeConstantCost(int num_states, int num_actions, double value);
CostSpec MakeThresholdCountCost(int num_states, int num_actions, int n,
                                int state, double lower, double upper,
                                double below_cost, double above_cost);

// Polynomial cost, time-homogeneous:
//   c(x,u,D) = base[x][u] + sum_z state_linear[x][u][z] d(z)
//            + sum_z state_quadratic[x][u][z] d(z)^2
//            + sum_{x',u'} joint_linear[x][u][x'][u'] D(x',u')
//            + sum_{x',u'} joint_quadratic[x][u][x'][u'] D(x',u')^2.
// Empty arrays are zero. Coupling is inferred from which terms are present.
struct PolynomialCost {
  std::vector<double> base;
  std::vector<double> state_linear;
  std::vector<double> state_quadratic;
  std::vector<double> joint_linear;
  std::vector<double> joint_quadratic;
};
CostSpec MakePolynomialCost(int num_states, int num_actions, PolynomialCost poly);

// Name -> factory registries for serializable plug-ins. Built-ins:
// costs "constant", "threshold_count", "polynomial".
using CostFactory = std::function<CostSpec(const Json& params, int num_states,
                                           int num_actions)>;
using KernelFactory = std::function<TransitionKernel(
    const Json& params, int num_states, int num_actions)>;
void RegisterCost(const std::string& type, CostFactory factory);
void RegisterKernel(const std::string& type, KernelFactory factory);

inline constexpr int kSchemaVersion = 1;

Json GameSpecToJson(const GameSpec& spec);
GameSpec GameSpecFromJson(const Json& j);
GameSpec LoadGameSpec(const std::string& path);
void SaveGameSpec(const GameSpec& spec, const std::string& path);

// Equality of the serialized forms (bit-exact for tabular data).
bool SameSpec(const GameSpec& a, const GameSpec& b);

}  // namespace popgame

#endif  // POPGAME_GAME_MODEL_HPP_
