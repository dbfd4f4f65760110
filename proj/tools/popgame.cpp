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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "popgame/bounds.hpp"
#include "popgame/dss_solver.hpp"
#include "popgame/error.hpp"
#include "popgame/game_model.hpp"
#include "popgame/io.hpp"
#include "popgame/mean_field_solver.hpp"
#include "popgame/parallel.hpp"
#include "popgame/population_simulator.hpp"

namespace {

using popgame::Error;
using popgame::ErrorCode;
using popgame::Json;

constexpr const char* kVersion = "popgame 0.1.0";
constexpr int kExitError = 2;
constexpr int kExitResidual = 3;

struct RunConfig {
  std::string command;
  std::string model;
  std::string builtin = "example1";
  int n = 0;
  int horizon = 0;
  double fp_tol = 1e-8;
  double vi_tol = 1e-8;
  int max_iters = 10000;
  int max_sweeps = 100000;
  int grid_k = 200;
  int trunc_T = 0;
  std::int64_t replications = 1000;
  std::uint64_t seed = 0;
  std::vector<int> n_list = {4, 8, 16, 32, 64};
  std::string out;
  int threads = 0;
  bool serial = false;
  bool allow_residual = false;
  int initial_states = 20;
  bool simulate = false;
  int stages = 0;
  std::string strategy;
  std::string ns_strategy;
  int samples = 2000;
  double gap = 0.0;
  std::string constants;
  bool paths = false;
  bool check_multiplicity = false;
};

// Options that change artifacts; the output directory and thread count do not.
Json ConfigToJson(const RunConfig& c) {
  return Json{{"command", c.command},
              {"model", c.model},
              {"builtin", c.builtin},
              {"n", c.n},
              {"horizon", c.horizon},
              {"fp_tol", c.fp_tol},
              {"vi_tol", c.vi_tol},
              {"max_iters", c.max_iters},
              {"max_sweeps", c.max_sweeps},
              {"grid_k", c.grid_k},
              {"trunc_T", c.trunc_T},
              {"replications", c.replications},
              {"seed", c.seed},
              {"n_list", c.n_list},
              {"allow_residual", c.allow_residual},
              {"initial_states", c.initial_states},
              {"simulate", c.simulate},
              {"stages", c.stages},
              {"strategy", c.strategy},
              {"ns_strategy", c.ns_strategy},
              {"samples", c.samples},
              {"gap", c.gap},
              {"constants", c.constants},
              {"paths", c.paths},
              {"check_multiplicity", c.check_multiplicity}};
}

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// Writes artifacts into the output directory and remembers their hashes for
// the manifest.
class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {}

  void Write(const std::string& name, const std::string& content) {
    popgame::WriteTextFile(Path(name), content);
    listed_[name] = Hex(Fnv1a(content));
  }
  void WriteJson(const std::string& name, const Json& j) { Write(name, j.dump(2) + "\n"); }
  std::string Path(const std::string& name) const { return dir_ + "/" + name; }
  const std::string& dir() const { return dir_; }
  Json Listing() const { return Json(listed_); }

 private:
  std::string dir_;
  std::map<std::string, std::string> listed_;
};

void Validate(const RunConfig& c) {
  if (!(c.fp_tol > 0.0) || !(c.vi_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerances must be > 0");
  }
  if (c.replications < 1) throw Error(ErrorCode::kInvalidArgument, "replications must be >= 1");
  if (c.grid_k < 1) throw Error(ErrorCode::kInvalidArgument, "grid resolution must be >= 1");
  if (c.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max-iters must be >= 1");
}

std::string OutputDir(const RunConfig& c) {
  if (!c.out.empty()) return c.out;
  const char* env = std::getenv("POPGAME_CACHE_DIR");
  const std::string base = env != nullptr && *env != '\0' ? env : ".";
  return base + "/popgame_out";
}

popgame::GameSpec SpecForN(const RunConfig& c, int n) {
  popgame::GameSpec spec;
  if (!c.model.empty()) {
    spec = popgame::LoadGameSpec(c.model);
    if (n > 0 && n != spec.n) {
      Json j = popgame::GameSpecToJson(spec);
      j["n"] = n;
      if (j["cost"].contains("params") && j["cost"]["params"].contains("n")) {
        j["cost"]["params"]["n"] = n;
      }
      spec = popgame::GameSpecFromJson(j);
    }
  } else {
    spec = popgame::BuiltinModel(c.builtin, n, c.horizon);
  }
  const popgame::ValidationReport report = popgame::Validate(spec);
  if (!report.ok()) throw Error(ErrorCode::kSchema, "invalid model: " + report.ToString());
  return spec;
}

popgame::DssOptions DssOptionsFor(const RunConfig& c) {
  popgame::DssOptions o;
  o.fixed_point.tolerance = c.fp_tol;
  o.fixed_point.max_iters = c.max_iters;
  o.vi_tolerance = c.vi_tol;
  o.max_sweeps = c.max_sweeps;
  o.execution = c.serial ? popgame::Execution::kSerial : popgame::Execution::kParallel;
  o.check_multiplicity = c.check_multiplicity;
  return o;
}

popgame::MeanFieldOptions MeanFieldOptionsFor(const RunConfig& c) {
  popgame::MeanFieldOptions o;
  o.fixed_point.tolerance = c.fp_tol;
  o.fixed_point.max_iters = c.max_iters;
  o.vi_tolerance = c.vi_tol;
  o.max_sweeps = c.max_sweeps;
  o.trunc_T = c.trunc_T;
  o.execution = c.serial ? popgame::Execution::kSerial : popgame::Execution::kParallel;
  return o;
}

bool Converged(const popgame::FixedPointReport& r) { return r.AllConverged() && r.vi_converged; }

// Returns the exit status for a solve whose report may carry residuals.
int ResidualStatus(const RunConfig& c, const popgame::FixedPointReport& r) {
  if (Converged(r) || c.allow_residual) return 0;
  std::cerr << Json{{"error",
                     {{"code", "non_converged"},
                      {"message", std::to_string(r.NonConverged()) +
                                      " fixed-point nodes did not converge; rerun with "
                                      "--allow-residual to accept"},
                      {"max_residual", r.MaxResidual()},
                      {"vi_converged", r.vi_converged}}}}
                   .dump()
            << "\n";
  return kExitResidual;
}

popgame::SimulationResult SimulateDss(const RunConfig& c, const popgame::GameSpec& spec,
                                      const popgame::EquilibriumStrategy& strategy,
                                      int default_stages, bool initial_conditions) {
  popgame::SimulationOptions s;
  s.stages = c.stages > 0 ? c.stages : default_stages;
  s.seed = c.seed;
  s.execution = c.serial ? popgame::Execution::kSerial : popgame::Execution::kParallel;
  s.store_paths = true;
  if (initial_conditions) {
    const int k = std::max(c.initial_states, 1);
    s.replications = k;
    for (int r = 0; r < k && k > 1; ++r) {
      const double p = static_cast<double>(r) / (k - 1);
      s.initial_dists.push_back({1.0 - p, p});
    }
  } else {
    s.replications = c.replications;
  }
  return popgame::Simulate(spec, popgame::DssPolicy(strategy), s);
}

int RunSolveDss(const RunConfig& c, Artifacts& art) {
  const popgame::GameSpec spec = SpecForN(c, c.n);
  const popgame::DssOptions opts = DssOptionsFor(c);
  const popgame::DssSolution sol =
      spec.horizon.finite() ? popgame::SolveFinite(spec, opts) : popgame::SolveDiscounted(spec, opts);
  const popgame::DeepStateSpace space(spec.n, spec.num_states(), opts.support_cap);
  art.WriteJson("strategy.json", popgame::StrategyToJson(sol.strategy, &sol.values));
  art.Write("fixed_point_report.csv", popgame::FixedPointReportCsv(sol.report));
  Json summary{{"n", spec.n},
               {"mode", spec.horizon.finite() ? "finite" : "discounted"},
               {"deep_states", space.size()},
               {"expected_initial_value",
                popgame::ExpectedInitialValue(spec, space, sol.values.slices[0])},
               {"fixed_point", popgame::FixedPointSummaryJson(sol.report)}};
  if (c.simulate) {
    const int default_stages = spec.horizon.finite() ? spec.horizon.stages : 50;
    const auto res = SimulateDss(c, spec, sol.strategy, default_stages, false);
    art.Write("trajectory.csv", popgame::TrajectoryCsv(res));
    summary["simulation"] = popgame::SimulationSummaryJson(res);
  }
  art.WriteJson("solve_summary.json", summary);
  std::cout << "solve-dss: " << sol.report.entries.size() << " nodes, max residual "
            << sol.report.MaxResidual() << ", non-converged " << sol.report.NonConverged()
            << "\n";
  return ResidualStatus(c, sol.report);
}

int RunAudit(const RunConfig& c, Artifacts& art) {
  const popgame::GameSpec spec = SpecForN(c, c.n);
  const std::string path = c.strategy.empty() ? art.Path("strategy.json") : c.strategy;
  const popgame::LoadedStrategy loaded =
      popgame::StrategyFromJson(Json::parse(popgame::ReadTextFile(path)));
  const popgame::AuditResult a =
      popgame::ExploitabilityAudit(spec, loaded.strategy, DssOptionsFor(c));
  art.WriteJson("audit.json", Json{{"max_gap", a.max_gap}, {"t", a.t}, {"x", a.x}, {"d", a.d}});
  std::cout << "audit: exploitability " << a.max_gap << " at t=" << a.t << ", x=" << a.x << "\n";
  if (a.max_gap > c.fp_tol + 1e-9 && !c.allow_residual) {
    std::cerr << Json{{"error",
                       {{"code", "exploitable"},
                        {"message", "exploitability exceeds the fixed-point tolerance"},
                        {"max_gap", a.max_gap}}}}
                     .dump()
              << "\n";
    return kExitResidual;
  }
  return 0;
}

int RunSolveNs(const RunConfig& c, Artifacts& art) {
  const popgame::GameSpec spec = SpecForN(c, c.n);
  const popgame::SimplexGrid grid = popgame::BuildGrid(spec.num_states(), c.grid_k);
  const popgame::MeanFieldOptions opts = MeanFieldOptionsFor(c);
  const popgame::MeanFieldSolution sol = spec.horizon.finite()
                                             ? popgame::SolveSmfeFinite(spec, grid, opts)
                                             : popgame::SolveSmfeDiscounted(spec, grid, opts);
  art.WriteJson("ns_strategy.json", popgame::NsStrategyToJson(sol.ns));
  art.Write("grid.csv", popgame::GridCsv(grid));
  art.Write("mf_fixed_point_report.csv", popgame::FixedPointReportCsv(sol.report));
  art.WriteJson("ns_summary.json",
                Json{{"grid_resolution", c.grid_k},
                     {"grid_nodes", grid.size()},
                     {"stages", sol.ns.stages()},
                     {"fixed_point", popgame::FixedPointSummaryJson(sol.report)}});
  std::cout << "solve-ns: " << grid.size() << " grid nodes, " << sol.ns.stages()
            << " stages, max residual " << sol.report.MaxResidual() << "\n";
  return ResidualStatus(c, sol.report);
}

int RunSimulate(const RunConfig& c, Artifacts& art) {
  const popgame::GameSpec spec = SpecForN(c, c.n);
  popgame::SimulationOptions s;
  s.replications = c.replications;
  s.seed = c.seed;
  s.store_paths = c.paths;
  s.execution = c.serial ? popgame::Execution::kSerial : popgame::Execution::kParallel;
  popgame::SimulationResult res;
  if (!c.ns_strategy.empty()) {
    const popgame::NSStrategy ns =
        popgame::NsStrategyFromJson(Json::parse(popgame::ReadTextFile(c.ns_strategy)));
    s.stages = c.stages > 0 ? c.stages : ns.stages();
    res = popgame::Simulate(spec, popgame::NsPolicy(ns), s);
  } else {
    const std::string path = c.strategy.empty() ? art.Path("strategy.json") : c.strategy;
    const popgame::LoadedStrategy loaded =
        popgame::StrategyFromJson(Json::parse(popgame::ReadTextFile(path)));
    const int default_stages = loaded.strategy.mode == popgame::EquilibriumStrategy::Mode::kFinite
                                   ? loaded.strategy.stages
                                   : 50;
    s.stages = c.stages > 0 ? c.stages : default_stages;
    res = popgame::Simulate(spec, popgame::DssPolicy(loaded.strategy), s);
  }
  art.WriteJson("simulation.json", popgame::SimulationSummaryJson(res));
  if (c.paths) {
    art.Write("trajectory.csv", popgame::TrajectoryCsv(res));
    art.Write("paths_plot.dat", popgame::PathPlotData(res, spec.num_states() - 1));
  }
  std::cout << "simulate: mean cost " << res.mean_cost << " (se " << res.standard_error
            << ") over " << res.replications << " replications\n";
  return 0;
}

int RunBounds(const RunConfig& c, Artifacts& art) {
  const popgame::GameSpec spec = SpecForN(c, c.n);
  popgame::BoundConstants k =
      c.constants.empty()
          ? popgame::EstimateConstants(spec, c.samples, c.seed)
          : popgame::BoundConstantsFromJson(Json::parse(popgame::ReadTextFile(c.constants)));
  if (!c.constants.empty() && k.beta == 1.0) k.beta = spec.horizon.beta;
  Json out{{"constants", popgame::BoundConstantsToJson(k)}, {"n", spec.n}};
  std::cout << "bounds: Kp=" << k.KpAt(1) << " Kc=" << k.KcAt(1) << " Km=" << k.KmAt(1)
            << (k.provenance == popgame::BoundConstants::Provenance::kEstimated
                    ? " (sample estimates, lower bounds)"
                    : " (user supplied)")
            << "\n";
  if (spec.horizon.finite()) {
    const popgame::KvKoResult kv = popgame::KvKo(k, spec.horizon.stages);
    const popgame::BoundValue b = popgame::FiniteBound(kv, spec.n, c.gap);
    out["kv_ko"] = popgame::KvKoToJson(kv);
    out["finite_bound"] = popgame::BoundValueToJson(b);
    out["gap"] = c.gap;
    std::cout << "  |V_1 - V^_1| <= " << b.value << " " << b.label << "\n";
  } else {
    const popgame::DiscountedBoundResult r = popgame::DiscountedBound(k, spec.n);
    out["discounted_bound"] = popgame::DiscountedBoundToJson(r);
    if (r.ok) {
      std::cout << "  |J* - J^| <= " << r.bound.value << " " << r.bound.label << "\n";
    } else {
      std::cout << "  refused: " << r.message << "\n";
    }
  }
  art.WriteJson("bounds.json", out);
  return 0;
}

int RunConvergence(const RunConfig& c, Artifacts& art) {
  RunConfig base = c;
  if (base.model.empty() && base.builtin == "example1") base.builtin = "coupled-binary";
  popgame::ConvergenceOptions o;
  o.replications = c.replications;
  o.seed = c.seed;
  o.grid_resolution = c.grid_k;
  o.dss = DssOptionsFor(c);
  o.mean_field = MeanFieldOptionsFor(c);
  o.execution = o.dss.execution;
  const popgame::ConvergenceTable table =
      popgame::ConvergenceExperiment([&](int n) { return SpecForN(base, n); }, c.n_list, o);
  std::ostringstream csv, plot;
  csv << "n,dss_value,ns_cost,ns_standard_error,gap\n";
  for (const auto& r : table.rows) {
    csv << r.n << ',' << popgame::FormatDouble(r.dss_value) << ','
        << popgame::FormatDouble(r.ns_cost) << ',' << popgame::FormatDouble(r.ns_standard_error)
        << ',' << popgame::FormatDouble(r.gap) << '\n';
    plot << r.n << ' ' << popgame::FormatDouble(r.gap) << '\n';
  }
  art.Write("convergence.csv", csv.str());
  art.Write("convergence_plot.dat", plot.str());
  art.WriteJson("convergence.json",
                Json{{"slope", table.slope}, {"non_increasing", table.non_increasing}});
  std::cout << "convergence: fitted log-log slope " << table.slope
            << (table.non_increasing ? ", gaps non-increasing" : ", gaps NOT non-increasing")
            << "\n";
  return 0;
}

int RunExample1(const RunConfig& c, Artifacts& art) {
  RunConfig base = c;
  if (base.model.empty()) base.builtin = "example1";
  const popgame::GameSpec spec = SpecForN(base, c.n);
  const popgame::DssOptions opts = DssOptionsFor(c);
  const popgame::DssSolution sol =
      spec.horizon.finite() ? popgame::SolveFinite(spec, opts) : popgame::SolveDiscounted(spec, opts);
  art.WriteJson("strategy.json", popgame::StrategyToJson(sol.strategy, &sol.values));
  art.Write("fixed_point_report.csv", popgame::FixedPointReportCsv(sol.report));
  Json summary{{"n", spec.n}, {"fixed_point", popgame::FixedPointSummaryJson(sol.report)}};
  if (c.simulate) {
    const auto res = SimulateDss(c, spec, sol.strategy, 50, true);
    art.Write("trajectory.csv", popgame::TrajectoryCsv(res));
    art.Write("fig1_requests.dat", popgame::PathPlotData(res, 1));
    const double inside = popgame::BandContainment(res, 1, 30 * spec.n / 100, 70 * spec.n / 100, 5);
    summary["band_containment_from_t5"] = inside;
    summary["simulation"] = popgame::SimulationSummaryJson(res);
    std::cout << "example1: request count inside the band on " << 100.0 * inside
              << "% of stages t >= 5\n";
  }
  art.WriteJson("example1_summary.json", summary);
  return ResidualStatus(c, sol.report);
}

template <typename T>
void Fill(const Json& j, const char* key, T& field, const CLI::App* sub, const char* flag) {
  if (j.contains(key) && sub->count(flag) == 0) field = j.at(key).get<T>();
}

// Values from a JSON config (or a manifest) fill every option not given on
// the command line.
void ApplyConfigFile(const std::string& path, RunConfig& c, const CLI::App* sub) {
  Json j = Json::parse(popgame::ReadTextFile(path));
  if (j.contains("config")) j = j.at("config");
  try {
    Fill(j, "model", c.model, sub, "--model");
    Fill(j, "builtin", c.builtin, sub, "--builtin");
    Fill(j, "n", c.n, sub, "--n");
    Fill(j, "horizon", c.horizon, sub, "--horizon");
    Fill(j, "fp_tol", c.fp_tol, sub, "--fp-tol");
    Fill(j, "vi_tol", c.vi_tol, sub, "--vi-tol");
    Fill(j, "max_iters", c.max_iters, sub, "--max-iters");
    Fill(j, "max_sweeps", c.max_sweeps, sub, "--max-sweeps");
    Fill(j, "grid_k", c.grid_k, sub, "--grid-k");
    Fill(j, "trunc_T", c.trunc_T, sub, "--trunc-T");
    Fill(j, "replications", c.replications, sub, "--replications");
    Fill(j, "seed", c.seed, sub, "--seed");
    Fill(j, "n_list", c.n_list, sub, "--n-list");
    Fill(j, "allow_residual", c.allow_residual, sub, "--allow-residual");
    Fill(j, "initial_states", c.initial_states, sub, "--initial-states");
    Fill(j, "simulate", c.simulate, sub, "--simulate");
    Fill(j, "stages", c.stages, sub, "--stages");
    Fill(j, "strategy", c.strategy, sub, "--strategy");
    Fill(j, "ns_strategy", c.ns_strategy, sub, "--ns-strategy");
    Fill(j, "samples", c.samples, sub, "--samples");
    Fill(j, "gap", c.gap, sub, "--gap");
    Fill(j, "constants", c.constants, sub, "--constants");
    Fill(j, "paths", c.paths, sub, "--paths");
    Fill(j, "check_multiplicity", c.check_multiplicity, sub, "--check-multiplicity");
  } catch (const Json::exception& e) {
    throw popgame::ParseError(path, e.what());
  }
}

void AddOptions(CLI::App* sub, RunConfig& c, std::string& config_path) {
  sub->add_option("--model", c.model, "model JSON file");
  sub->add_option("--builtin", c.builtin, "builtin model: example1, example1-small, coupled-binary");
  sub->add_option("--n", c.n, "population size override");
  sub->add_option("--horizon", c.horizon, "finite horizon override for builtin models");
  sub->add_option("--fp-tol", c.fp_tol, "fixed-point tolerance");
  sub->add_option("--vi-tol", c.vi_tol, "value-iteration tolerance");
  sub->add_option("--max-iters", c.max_iters, "fixed-point iteration cap");
  sub->add_option("--max-sweeps", c.max_sweeps, "value-iteration sweep cap");
  sub->add_option("--grid-k", c.grid_k, "simplex grid resolution");
  sub->add_option("--trunc-T", c.trunc_T, "truncated horizon for discounted no-sharing laws");
  sub->add_option("--replications", c.replications, "Monte Carlo replications");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--n-list", c.n_list, "population sizes for the convergence experiment")
      ->delimiter(',');
  sub->add_option("--out", c.out, "output directory (default $POPGAME_CACHE_DIR/popgame_out)");
  sub->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)");
  sub->add_flag("--serial", c.serial, "use the serial reference kernels");
  sub->add_flag("--allow-residual", c.allow_residual, "exit 0 despite non-converged nodes");
  sub->add_option("--initial-states", c.initial_states, "number of initial conditions");
  sub->add_flag("--simulate", c.simulate, "simulate the solved strategy");
  sub->add_option("--stages", c.stages, "simulated stages");
  sub->add_option("--strategy", c.strategy, "deep-state strategy JSON");
  sub->add_option("--ns-strategy", c.ns_strategy, "no-sharing strategy JSON");
  sub->add_option("--samples", c.samples, "sample budget for constant estimation");
  sub->add_option("--gap", c.gap, "distance between deep state and mean field");
  sub->add_option("--constants", c.constants, "user-supplied constants JSON");
  sub->add_flag("--paths", c.paths, "store and write simulated paths");
  sub->add_flag("--check-multiplicity", c.check_multiplicity,
                "re-solve nodes from a second start and flag distinct equilibria");
  sub->add_option("--config", config_path, "JSON config or manifest supplying defaults");
}

void ReportError(const std::string& code, const std::string& message, const std::string& dir) {
  const Json j{{"error", {{"code", code}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  std::error_code ec;
  if (!dir.empty() && std::filesystem::is_directory(dir, ec)) {
    try {
      popgame::WriteTextFile(dir + "/error.json", j.dump(2) + "\n");
    } catch (...) {
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-population deep-state game solver and simulator"};
  app.require_subcommand(1);
  RunConfig config;
  std::string config_path;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve-dss", "deep Nash equilibrium by backward induction or value iteration"},
      {"solve-ns", "sequential mean-field equilibrium on a simplex grid"},
      {"simulate", "Monte Carlo rollout of a solved strategy"},
      {"bounds", "model constants and approximation bounds"},
      {"convergence", "gap between no-sharing and deep-state values across n"},
      {"example1", "shared-resource request game with n = 100"},
      {"audit", "exploitability of a deep-state strategy"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddOptions(sub, config, config_path);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    ReportError("usage", e.what(), "");
    return kExitError;
  }
  CLI::App* sub = nullptr;
  for (CLI::App* s : subs) {
    if (s->parsed()) sub = s;
  }
  config.command = sub->get_name();

  std::string dir;
  try {
    if (!config_path.empty()) ApplyConfigFile(config_path, config, sub);
    Validate(config);
    dir = OutputDir(config);
    std::filesystem::create_directories(dir);
    if (config.threads > 0) popgame::SetThreadCount(config.threads);
    Artifacts art(dir);
    int status = 0;
    if (config.command == "solve-dss") status = RunSolveDss(config, art);
    if (config.command == "solve-ns") status = RunSolveNs(config, art);
    if (config.command == "simulate") status = RunSimulate(config, art);
    if (config.command == "bounds") status = RunBounds(config, art);
    if (config.command == "convergence") status = RunConvergence(config, art);
    if (config.command == "example1") status = RunExample1(config, art);
    if (config.command == "audit") status = RunAudit(config, art);
    const Json cfg = ConfigToJson(config);
    art.WriteJson("manifest.json", Json{{"version", kVersion},
                                        {"config", cfg},
                                        {"config_hash", Hex(Fnv1a(cfg.dump()))},
                                        {"seeds", {config.seed}},
                                        {"artifacts", art.Listing()},
                                        {"status", status}});
    return status;
  } catch (const popgame::Error& e) {
    ReportError(popgame::ErrorCodeName(e.code()), e.what(), dir);
  } catch (const Json::exception& e) {
    ReportError("parse", e.what(), dir);
  } catch (const std::filesystem::filesystem_error& e) {
    ReportError("io", e.what(), dir);
  } catch (const std::exception& e) {
    ReportError("internal", e.what(), dir);
  }
  return kExitError;
}
