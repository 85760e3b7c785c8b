// Serial and OpenMP variants of the filter, baseline and search kernels.
#include "mut/policy_search.hpp"

#include <benchmark/benchmark.h>

#include <map>

namespace {

using namespace mut;

const ScenarioSim& lane(int length) {
  static std::map<int, ScenarioSim> cache;
  auto it = cache.find(length);
  if (it == cache.end()) {
    LaneChangeConfig c;
    c.length = length;
    it = cache.emplace(length, build_lane_change(c)).first;
  }
  return it->second;
}

Exec exec_arg(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_Filter(benchmark::State& st) {
  const ScenarioSim& s = lane(static_cast<int>(st.range(0)));
  FilterOptions fo;
  fo.exec = exec_arg(st);
  const auto goals = goal_classes(*s.aux, s.aux_arena);
  for (auto _ : st) benchmark::DoNotOptimize(synthesize_filter(s.aux_arena, goals, fo).size());
}

void BM_FilterFullPasses(benchmark::State& st) {
  const ScenarioSim& s = lane(static_cast<int>(st.range(0)));
  FilterOptions fo;
  fo.exec = exec_arg(st);
  fo.incremental = false;
  const auto goals = goal_classes(*s.aux, s.aux_arena);
  for (auto _ : st) benchmark::DoNotOptimize(synthesize_filter(s.aux_arena, goals, fo).size());
}

void BM_Monolithic(benchmark::State& st) {
  const ScenarioSim& s = lane(static_cast<int>(st.range(0)));
  const auto goals = goal_classes(*s.aux, s.aux_arena);
  for (auto _ : st) benchmark::DoNotOptimize(monolithic_winning_region(s.aux_arena, goals, exec_arg(st)).count());
}

void BM_MonolithicPerVertex(benchmark::State& st) {
  const ScenarioSim& s = lane(static_cast<int>(st.range(0)));
  const auto goals = goal_classes(*s.aux, s.aux_arena);
  for (auto _ : st)
    benchmark::DoNotOptimize(monolithic_winning_region(s.aux_arena, goals, exec_arg(st), GoalGrain::vertex).count());
}

void BM_Episode(benchmark::State& st) {
  const ScenarioSim& s = lane(static_cast<int>(st.range(0)));
  static std::map<int, FilterW> filters;
  auto it = filters.find(static_cast<int>(st.range(0)));
  if (it == filters.end()) it = filters.emplace(static_cast<int>(st.range(0)), synthesize_filter(*s.aux, s.spec)).first;
  SearchParams p;
  p.rollouts = 64;
  p.batch = 8;
  p.exec = exec_arg(st);
  for (auto _ : st) benchmark::DoNotOptimize(run_episode(s, it->second, p).reward);
}

BENCHMARK(BM_Filter)->ArgsProduct({{5, 10, 15}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FilterFullPasses)->ArgsProduct({{5, 10, 15}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Monolithic)->ArgsProduct({{5, 10, 15}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonolithicPerVertex)->ArgsProduct({{5, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Episode)->ArgsProduct({{5, 10}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
