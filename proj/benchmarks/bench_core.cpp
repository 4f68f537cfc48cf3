#include <benchmark/benchmark.h>

#include <vector>

#include "smarttoy/checker.hpp"
#include "smarttoy/policy_lang.hpp"
#include "smarttoy/prediction.hpp"
#include "smarttoy/rng.hpp"

using namespace smarttoy;

static void BM_ParseBuiltinPolicies(benchmark::State& state) {
  const std::string_view src = builtin_policy_source();
  for (auto _ : state) benchmark::DoNotOptimize(parse_policy_set(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ParseBuiltinPolicies);

static void BM_CheckerIngestPatterns(benchmark::State& state) {
  Rng rng(1);
  std::vector<BehaviorEvent> events;
  std::int64_t ts = 0;
  for (int i = 0; i < 4096; ++i) {
    ts += rng.between(0, 2000);
    events.push_back({{ts}, ChildId{"c"}, PatternEvent{kAllPatternKinds[rng.below(kAllPatternKinds.size())]}});
  }
  CheckerConfig cfg;
  cfg.pattern_window_ms = state.range(0);
  for (auto _ : state) {
    Checker c(builtin_policies(), cfg);
    for (const auto& e : events) benchmark::DoNotOptimize(c.ingest(e));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(events.size()));
}
BENCHMARK(BM_CheckerIngestPatterns)->Arg(2000)->Arg(10000)->Arg(60000);

static void BM_MlpForward(benchmark::State& state) {
  const auto in = static_cast<std::size_t>(state.range(0));
  const MlpModel m = MlpModel::initialized(in, 16, 7);
  Rng rng(2);
  std::vector<double> x(in);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward(m, x));
}
BENCHMARK(BM_MlpForward)->Arg(17)->Arg(27);

BENCHMARK_MAIN();
