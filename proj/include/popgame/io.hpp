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

#ifndef POPGAME_IO_HPP_
#define POPGAME_IO_HPP_

#include <string>

#include "popgame/dss_solver.hpp"
#include "popgame/game_model.hpp"
#include "popgame/mean_field_solver.hpp"
#include "popgame/population_simulator.hpp"

namespace popgame {

// {mode, n, stages, entries: [{t, d_counts, law, value_by_state}]}. Values are
// included when `values` is given.
Json StrategyToJson(const EquilibriumStrategy& strategy, const ValueTable* values = nullptr);

struct LoadedStrategy {
  EquilibriumStrategy strategy;
  ValueTable values;
  bool has_values = false;
};

LoadedStrategy StrategyFromJson(const Json& j);

// Header: t,d,iters,residual,converged. d is written as counts joined by ':'.
std::string FixedPointReportCsv(const FixedPointReport& report);

Json NsStrategyToJson(const NSStrategy& ns);
NSStrategy NsStrategyFromJson(const Json& j);

// node,m_0,...,m_{|X|-1}
std::string GridCsv(const SimplexGrid& grid);

// replication,t,count_0,...,count_{|X|-1}
std::string TrajectoryCsv(const SimulationResult& result);

// Plain "t value" columns, one block per replication separated by a blank
// line; value is the count in `state`.
std::string PathPlotData(const SimulationResult& result, int state);

Json SimulationSummaryJson(const SimulationResult& result);

Json FixedPointSummaryJson(const FixedPointReport& report);

std::string ReadTextFile(const std::string& path);
// Throws kIo when the file cannot be written.
void WriteTextFile(const std::string& path, const std::string& content);

// Fixed-precision text for doubles in CSV output.
std::string FormatDouble(double v);

}  // namespace popgame

#endif  // POPGAME_IO_HPP_
