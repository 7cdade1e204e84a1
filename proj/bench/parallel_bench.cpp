#include <benchmark/benchmark.h>

#include "csshap/attribution.hpp"
#include "csshap/model.hpp"
#include "csshap/simulation.hpp"

namespace {

using namespace csshap;

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "openmp"); }

void BM_BuildDataset(benchmark::State& state) {
  auto spec = default_dataset_spec();
  spec.samples_per_class = 20;
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(spec, exec_of(state)));
  label(state);
}
BENCHMARK(BM_BuildDataset)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  auto spec = default_dataset_spec();
  spec.samples_per_class = 22;
  const auto ds = build_dataset(spec);
  const auto model = build_model(default_cnn_config());
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch(ds.samples, exec_of(state)));
  label(state);
}
BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Attribute(benchmark::State& state) {
  auto spec = default_dataset_spec();
  spec.samples_per_class = 4;
  const auto ds = build_dataset(spec);
  const auto model = build_model(default_cnn_config());
  const std::vector<TimeSeries> refs(ds.samples.begin() + 1, ds.samples.begin() + 5);
  const auto bg = make_background(DomainKind::kCyclicSpectral, refs, WindowSpec::default_window());
  AttributionConfig cfg;
  cfg.num_permutations = 4;
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(attribute(model, ds.samples[0], bg, cfg, ds.class_names));
  label(state);
}
BENCHMARK(BM_Attribute)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
