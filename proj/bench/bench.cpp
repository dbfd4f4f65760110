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

// Serial reference kernels against the OpenMP path on the same workloads.
// Prints one line per workload; exits nonzero if the two disagree.
//   popgame_bench [--quick]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "popgame/dss_solver.hpp"
#include "popgame/mean_field_solver.hpp"
#include "popgame/parallel.hpp"
#include "popgame/population_simulator.hpp"

using namespace popgame;

namespace {

template <typename Fn>
double Seconds(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool Report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  %s\n", name, serial,
              parallel, serial / parallel, same ? "identical" : "MISMATCH");
  return same;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  std::printf("threads: %d\n", ThreadCount());
  bool ok = true;

  {
    auto spec = BuildExample1();
    spec.horizon = Horizon::Finite(quick ? 5 : 20);
    DssOptions o;
    DssSolution a, b;
    o.execution = Execution::kSerial;
    const double ts = Seconds([&] { a = SolveFinite(spec, o); });
    o.execution = Execution::kParallel;
    const double tp = Seconds([&] { b = SolveFinite(spec, o); });
    ok &= Report("dss finite (example1)", ts, tp, a.values.slices == b.values.slices);
  }
  {
    auto spec = BuildExample1();
    spec.horizon = Horizon::Discounted(0.9);
    if (quick) spec.n = 30;
    DssOptions o;
    DssSolution a, b;
    o.execution = Execution::kSerial;
    const double ts = Seconds([&] { a = SolveDiscounted(spec, o); });
    o.execution = Execution::kParallel;
    const double tp = Seconds([&] { b = SolveDiscounted(spec, o); });
    ok &= Report("dss discounted (example1)", ts, tp, a.values.slices == b.values.slices);
  }
  {
    auto spec = BuildExample1();
    spec.horizon = Horizon::Finite(20);
    const auto grid = BuildGrid(2, quick ? 50 : 400);
    MeanFieldOptions o;
    std::vector<std::vector<double>> a, b;
    o.execution = Execution::kSerial;
    const double ts = Seconds([&] { a = SolveSmfeFinite(spec, grid, o).values; });
    o.execution = Execution::kParallel;
    const double tp = Seconds([&] { b = SolveSmfeFinite(spec, grid, o).values; });
    ok &= Report("mean field finite (example1)", ts, tp, a == b);
  }
  {
    const auto spec = BuildExample1Small();
    const auto sol = SolveFinite(spec);
    DssPolicy policy(sol.strategy);
    SimulationOptions o;
    o.stages = spec.horizon.stages;
    o.replications = quick ? 20000 : 400000;
    o.seed = 5;
    SimulationResult a, b;
    o.execution = Execution::kSerial;
    const double ts = Seconds([&] { a = Simulate(spec, policy, o); });
    o.execution = Execution::kParallel;
    const double tp = Seconds([&] { b = Simulate(spec, policy, o); });
    ok &= Report("simulate (example1-small)", ts, tp,
                 a.replication_cost == b.replication_cost && a.mean_cost == b.mean_cost);
  }
  return ok ? 0 : 1;
}
