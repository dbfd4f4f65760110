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

#include "popgame/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "popgame/error.hpp"

namespace popgame {
namespace {

const char* ModeName(EquilibriumStrategy::Mode m) {
  return m == EquilibriumStrategy::Mode::kFinite ? "finite" : "stationary";
}

std::string JoinCounts(const Counts& c, char sep) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(c[i]);
  }
  return s;
}

LocalLaw LawFromJson(const Json& j, const std::string& path) {
  try {
    LocalLaw law = LocalLaw::FromRows(j.get<std::vector<std::vector<double>>>());
    law.Validate(1e-9);
    return law;
  } catch (const Json::exception& e) {
    throw ParseError(path, e.what());
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json StrategyToJson(const EquilibriumStrategy& strategy, const ValueTable* values) {
  Json entries = Json::array();
  const CompositionIndex index(strategy.n, strategy.num_states);
  for (int s = 0; s < strategy.stages; ++s) {
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(strategy.laws[s].size()); ++r) {
      const Counts d = index.Unrank(r);
      Json e{{"t", s + 1}, {"d_counts", d}, {"law", strategy.laws[s][r].Rows()}};
      if (values != nullptr) {
        std::vector<double> v(strategy.num_states);
        for (int x = 0; x < strategy.num_states; ++x) v[x] = (*values)(s, x, r);
        e["value_by_state"] = v;
      }
      entries.push_back(std::move(e));
    }
  }
  return Json{{"mode", ModeName(strategy.mode)},
              {"n", strategy.n},
              {"stages", strategy.stages},
              {"num_states", strategy.num_states},
              {"num_actions", strategy.num_actions},
              {"entries", std::move(entries)}};
}

LoadedStrategy StrategyFromJson(const Json& j) {
  LoadedStrategy out;
  EquilibriumStrategy& s = out.strategy;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "finite") {
      s.mode = EquilibriumStrategy::Mode::kFinite;
    } else if (mode == "stationary") {
      s.mode = EquilibriumStrategy::Mode::kStationary;
    } else {
      throw ParseError("mode", "unknown strategy mode '" + mode + "'");
    }
    s.n = j.at("n").get<int>();
    s.stages = j.at("stages").get<int>();
    s.num_states = j.at("num_states").get<int>();
    s.num_actions = j.at("num_actions").get<int>();
  } catch (const Json::exception& e) {
    throw ParseError("strategy", e.what());
  }
  if (s.n < 1 || s.stages < 1 || s.num_states < 1 || s.num_actions < 1) {
    throw Error(ErrorCode::kSchema, "strategy header has nonpositive sizes");
  }
  const CompositionIndex index(s.n, s.num_states);
  s.laws.assign(s.stages, std::vector<LocalLaw>(index.size()));
  std::vector<std::vector<bool>> seen(s.stages, std::vector<bool>(index.size(), false));
  out.values.num_states = s.num_states;
  out.values.num_deep = index.size();
  const Json& entries = j.at("entries");
  out.has_values = !entries.empty() && entries[0].contains("value_by_state");
  if (out.has_values) {
    out.values.slices.assign(s.mode == EquilibriumStrategy::Mode::kFinite ? s.stages + 1 : 1,
                             std::vector<double>(s.num_states * index.size(), 0.0));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = "entries[" + std::to_string(i) + "]";
    const Json& e = entries[i];
    int t = 0;
    Counts d;
    try {
      t = e.at("t").get<int>();
      d = e.at("d_counts").get<Counts>();
    } catch (const Json::exception& ex) {
      throw ParseError(path, ex.what());
    }
    int total = 0;
    for (int c : d) total += c;
    if (t < 1 || t > s.stages || static_cast<int>(d.size()) != s.num_states || total != s.n) {
      throw ParseError(path, "entry does not match the strategy header");
    }
    const std::int64_t r = index.Rank(d);
    s.laws[t - 1][r] = LawFromJson(e.at("law"), path + ".law");
    if (s.laws[t - 1][r].num_states() != s.num_states ||
        s.laws[t - 1][r].num_actions() != s.num_actions) {
      throw ParseError(path + ".law", "law has the wrong shape");
    }
    seen[t - 1][r] = true;
    if (out.has_values) {
      const auto v = e.at("value_by_state").get<std::vector<double>>();
      for (int x = 0; x < s.num_states; ++x) {
        out.values.slices[t - 1][static_cast<std::size_t>(x) * index.size() + r] = v.at(x);
      }
    }
  }
  for (int t = 0; t < s.stages; ++t) {
    for (std::int64_t r = 0; r < index.size(); ++r) {
      if (!seen[t][r]) {
        throw Error(ErrorCode::kStrategyGap, "strategy file has no entry for stage " +
                                                 std::to_string(t + 1) + ", deep state (" +
                                                 JoinCounts(index.Unrank(r), ',') + ")");
      }
    }
  }
  return out;
}

std::string FixedPointReportCsv(const FixedPointReport& report) {
  std::ostringstream os;
  os << "t,d,iters,residual,converged\n";
  for (const auto& e : report.entries) {
    os << e.t << ',' << JoinCounts(e.d, ':') << ',' << e.iterations << ','
       << FormatDouble(e.residual) << ',' << (e.converged ? 1 : 0) << '\n';
  }
  return os.str();
}

Json NsStrategyToJson(const NSStrategy& ns) {
  Json laws = Json::array();
  for (const auto& l : ns.laws) laws.push_back(l.Rows());
  return Json{{"m_trajectory", ns.trajectory},
              {"laws", std::move(laws)},
              {"grid_resolution", ns.grid_resolution},
              {"residuals", ns.residuals}};
}

NSStrategy NsStrategyFromJson(const Json& j) {
  NSStrategy ns;
  try {
    ns.trajectory = j.at("m_trajectory").get<std::vector<MeanField>>();
    ns.grid_resolution = j.at("grid_resolution").get<int>();
    ns.residuals = j.at("residuals").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ParseError("ns_strategy", e.what());
  }
  const Json& laws = j.at("laws");
  for (std::size_t i = 0; i < laws.size(); ++i) {
    ns.laws.push_back(LawFromJson(laws[i], "laws[" + std::to_string(i) + "]"));
  }
  if (ns.laws.size() != ns.trajectory.size()) {
    throw ParseError("laws", "expected " + std::to_string(ns.trajectory.size()) +
                                 " laws, got " + std::to_string(ns.laws.size()));
  }
  return ns;
}

std::string GridCsv(const SimplexGrid& grid) {
  std::ostringstream os;
  os << "node";
  for (int x = 0; x < grid.num_states(); ++x) os << ",m_" << x;
  os << '\n';
  for (std::int64_t r = 0; r < grid.size(); ++r) {
    os << r;
    for (double v : grid.Node(r)) os << ',' << FormatDouble(v);
    os << '\n';
  }
  return os.str();
}

std::string TrajectoryCsv(const SimulationResult& result) {
  std::ostringstream os;
  os << "replication,t";
  const int nx = result.paths.empty() || result.paths[0].empty()
                     ? 0
                     : static_cast<int>(result.paths[0][0].size());
  for (int x = 0; x < nx; ++x) os << ",count_" << x;
  os << '\n';
  for (std::size_t r = 0; r < result.paths.size(); ++r) {
    for (std::size_t t = 0; t < result.paths[r].size(); ++t) {
      os << r << ',' << t + 1;
      for (int c : result.paths[r][t]) os << ',' << c;
      os << '\n';
    }
  }
  return os.str();
}

std::string PathPlotData(const SimulationResult& result, int state) {
  std::ostringstream os;
  for (std::size_t r = 0; r < result.paths.size(); ++r) {
    if (r) os << "\n\n";
    os << "# replication " << r << "\n";
    for (std::size_t t = 0; t < result.paths[r].size(); ++t) {
      os << t + 1 << ' ' << result.paths[r][t][state] << '\n';
    }
  }
  return os.str();
}

Json SimulationSummaryJson(const SimulationResult& result) {
  return Json{{"replications", result.replications},
              {"stages", result.stages},
              {"n", result.n},
              {"seed", result.seed},
              {"mean_cost", result.mean_cost},
              {"standard_error", result.standard_error},
              {"player_mean_cost", result.player_mean_cost}};
}

Json FixedPointSummaryJson(const FixedPointReport& report) {
  Json j{{"nodes", report.entries.size()},
         {"non_converged", report.NonConverged()},
         {"max_residual", report.MaxResidual()},
         {"multiple_equilibria_nodes", report.multiple_equilibria_nodes}};
  if (!report.sweep_differences.empty()) {
    j["sweeps"] = report.sweep_differences.size();
    j["sweep_differences"] = report.sweep_differences;
    j["bellman_residual"] = report.bellman_residual;
    j["vi_converged"] = report.vi_converged;
  }
  return j;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace popgame
